"""Prompt bundle serialization and coarse-mask downsampling.

The JSON contract is the seam between this library and any external refiner.
Inside the library points are (row, col); the JSON stores x = col, y = row,
converted exactly once here.  Serialization is canonical: UTF-8, two-space
indent, fixed key order, one trailing newline, so identical bundles produce
identical bytes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path, PurePosixPath
from typing import Any, NamedTuple

from .errors import DimensionMismatchError, PromptSchemaError
from .mask import BinaryMask
from .poi import PromptPoints

__all__ = [
    "PromptPoint",
    "PromptSource",
    "PromptBundle",
    "points_from_prompts",
    "downsample_maxpool",
    "dumps_prompt",
    "write_prompt",
    "read_prompt",
]

LOWRES_SIZE = 256
FULLRES_SIZE = 1024


class PromptPoint(NamedTuple):
    """One serialized prompt point: x = column, y = row, label 1 = positive."""

    x: int
    y: int
    label: int


@dataclass(frozen=True)
class PromptSource:
    """Provenance of the coarse mask the prompts were derived from."""

    method: str
    unet_epochs: int
    train_fraction: int


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _check_relative_path(value: Any, pointer: str) -> None:
    if not isinstance(value, str) or not value:
        raise PromptSchemaError(f"{pointer}: must be a nonempty string")
    if PurePosixPath(value).is_absolute():
        raise PromptSchemaError(f"{pointer}: must be a relative path, got {value!r}")


@dataclass(frozen=True)
class PromptBundle:
    """Everything a refiner needs for one image, validated on construction."""

    image_id: str
    image_path: str
    image_width: int
    image_height: int
    points: tuple[PromptPoint, ...]
    lowres_mask_path: str
    source: PromptSource

    def __post_init__(self) -> None:
        if not isinstance(self.image_id, str) or not self.image_id:
            raise PromptSchemaError("/image_id: must be a nonempty string")
        _check_relative_path(self.image_path, "/image_path")
        if not _is_int(self.image_width) or self.image_width < 1:
            raise PromptSchemaError("/image_width: must be an integer >= 1")
        if not _is_int(self.image_height) or self.image_height < 1:
            raise PromptSchemaError("/image_height: must be an integer >= 1")
        object.__setattr__(self, "points", tuple(self.points))
        for i, pt in enumerate(self.points):
            if not isinstance(pt, PromptPoint):
                raise PromptSchemaError(f"/points/{i}: must be a PromptPoint")
            for field in ("x", "y", "label"):
                if not _is_int(getattr(pt, field)):
                    raise PromptSchemaError(f"/points/{i}/{field}: must be an integer")
            if pt.label not in (0, 1):
                raise PromptSchemaError(f"/points/{i}/label: must be 0 or 1, got {pt.label}")
            if not 0 <= pt.x < self.image_width:
                raise PromptSchemaError(
                    f"/points/{i}/x: {pt.x} out of bounds for width {self.image_width}"
                )
            if not 0 <= pt.y < self.image_height:
                raise PromptSchemaError(
                    f"/points/{i}/y: {pt.y} out of bounds for height {self.image_height}"
                )
        _check_relative_path(self.lowres_mask_path, "/lowres_mask_path")
        if not isinstance(self.source, PromptSource):
            raise PromptSchemaError("/source: must be a PromptSource")
        if not isinstance(self.source.method, str) or not self.source.method:
            raise PromptSchemaError("/source/method: must be a nonempty string")
        if not _is_int(self.source.unet_epochs) or self.source.unet_epochs < 0:
            raise PromptSchemaError("/source/unet_epochs: must be an integer >= 0")
        if not _is_int(self.source.train_fraction) or not 0 <= self.source.train_fraction <= 100:
            raise PromptSchemaError("/source/train_fraction: must be an integer in [0, 100]")


def points_from_prompts(points: PromptPoints) -> tuple[PromptPoint, ...]:
    """Serialize generated points: positives (label 1) first, then negatives,
    converting (row, col) to (x=col, y=row)."""
    out = [PromptPoint(x=p.col, y=p.row, label=1) for p in points.positives]
    out.extend(PromptPoint(x=p.col, y=p.row, label=0) for p in points.negatives)
    return tuple(out)


def downsample_maxpool(mask: BinaryMask) -> BinaryMask:
    """1024x1024 -> 256x256 by OR over non-overlapping 4x4 windows."""
    if mask.shape != (FULLRES_SIZE, FULLRES_SIZE):
        raise DimensionMismatchError(
            f"downsample_maxpool expects {FULLRES_SIZE}x{FULLRES_SIZE}, "
            f"got {mask.height}x{mask.width}"
        )
    window = FULLRES_SIZE // LOWRES_SIZE
    pooled = mask.data.reshape(LOWRES_SIZE, window, LOWRES_SIZE, window).any(axis=(1, 3))
    return BinaryMask(pooled)


def _bundle_to_obj(bundle: PromptBundle) -> dict[str, Any]:
    return {
        "image_id": bundle.image_id,
        "image_path": bundle.image_path,
        "image_width": bundle.image_width,
        "image_height": bundle.image_height,
        "points": [{"x": p.x, "y": p.y, "label": p.label} for p in bundle.points],
        "lowres_mask_path": bundle.lowres_mask_path,
        "source": {
            "method": bundle.source.method,
            "unet_epochs": bundle.source.unet_epochs,
            "train_fraction": bundle.source.train_fraction,
        },
    }


def dumps_prompt(bundle: PromptBundle) -> str:
    """Canonical JSON text for a bundle."""
    return json.dumps(_bundle_to_obj(bundle), indent=2, ensure_ascii=False) + "\n"


def write_prompt(bundle: PromptBundle, path: str | Path) -> None:
    Path(path).write_text(dumps_prompt(bundle), encoding="utf-8")


_TOP_KEYS = (
    "image_id",
    "image_path",
    "image_width",
    "image_height",
    "points",
    "lowres_mask_path",
    "source",
)
_POINT_KEYS = ("x", "y", "label")
_SOURCE_KEYS = ("method", "unet_epochs", "train_fraction")


def _require_object(value: Any, keys: tuple[str, ...], pointer: str) -> dict:
    if not isinstance(value, dict):
        raise PromptSchemaError(f"{pointer}: must be a JSON object")
    prefix = "" if pointer == "/" else pointer
    for key in keys:
        if key not in value:
            raise PromptSchemaError(f"{prefix}/{key}: missing required field")
    for key in value:
        if key not in keys:
            raise PromptSchemaError(f"{prefix}/{key}: unknown field")
    return value


def _require_int(value: Any, pointer: str) -> int:
    if not _is_int(value):
        raise PromptSchemaError(f"{pointer}: must be an integer")
    return value


def read_prompt(path: str | Path) -> PromptBundle:
    """Parse and validate a bundle file; errors carry a JSON pointer."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise PromptSchemaError(f"cannot read prompt file {path}: {exc}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PromptSchemaError(f"/: malformed JSON: {exc}") from None
    top = _require_object(obj, _TOP_KEYS, "/")
    raw_points = top["points"]
    if not isinstance(raw_points, list):
        raise PromptSchemaError("/points: must be an array")
    points = []
    for i, entry in enumerate(raw_points):
        ptr = f"/points/{i}"
        entry = _require_object(entry, _POINT_KEYS, ptr)
        points.append(
            PromptPoint(
                x=_require_int(entry["x"], f"{ptr}/x"),
                y=_require_int(entry["y"], f"{ptr}/y"),
                label=_require_int(entry["label"], f"{ptr}/label"),
            )
        )
    raw_source = _require_object(top["source"], _SOURCE_KEYS, "/source")
    if not isinstance(raw_source["method"], str):
        raise PromptSchemaError("/source/method: must be a string")
    source = PromptSource(
        method=raw_source["method"],
        unet_epochs=_require_int(raw_source["unet_epochs"], "/source/unet_epochs"),
        train_fraction=_require_int(raw_source["train_fraction"], "/source/train_fraction"),
    )
    if not isinstance(top["image_id"], str):
        raise PromptSchemaError("/image_id: must be a string")
    if not isinstance(top["image_path"], str):
        raise PromptSchemaError("/image_path: must be a string")
    if not isinstance(top["lowres_mask_path"], str):
        raise PromptSchemaError("/lowres_mask_path: must be a string")
    return PromptBundle(
        image_id=top["image_id"],
        image_path=top["image_path"],
        image_width=_require_int(top["image_width"], "/image_width"),
        image_height=_require_int(top["image_height"], "/image_height"),
        points=tuple(points),
        lowres_mask_path=top["lowres_mask_path"],
        source=source,
    )
