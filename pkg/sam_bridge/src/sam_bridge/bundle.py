"""Reader for the prompt bundle JSON contract.

This is the consumer side of the cross-package interface: a strict parser of
the documented schema, independent of whatever tool produced the file.
Errors carry a JSON pointer to the offending field.

Top-level keys, all required, nothing else allowed:
  image_id          nonempty string
  image_path        nonempty relative path
  image_width       integer >= 1
  image_height      integer >= 1
  points            array of {x, y, label}; label 0 or 1; x/y in bounds
  lowres_mask_path  nonempty relative path
  source            {method, unet_epochs, train_fraction}
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path, PurePosixPath
from typing import Any

from .errors import SchemaError

TOP_KEYS = (
    "image_id",
    "image_path",
    "image_width",
    "image_height",
    "points",
    "lowres_mask_path",
    "source",
)
POINT_KEYS = ("x", "y", "label")
SOURCE_KEYS = ("method", "unet_epochs", "train_fraction")


@dataclass(frozen=True)
class Bundle:
    image_id: str
    image_path: str
    image_width: int
    image_height: int
    points: tuple[tuple[int, int, int], ...]  # (x, y, label)
    lowres_mask_path: str
    source: dict[str, Any]


def _object(value: Any, keys: tuple[str, ...], pointer: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(f"{pointer}: must be a JSON object")
    prefix = "" if pointer == "/" else pointer
    for key in keys:
        if key not in value:
            raise SchemaError(f"{prefix}/{key}: missing required field")
    for key in value:
        if key not in keys:
            raise SchemaError(f"{prefix}/{key}: unknown field")
    return value


def _int(value: Any, pointer: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise SchemaError(f"{pointer}: must be an integer")
    return value


def _relative_path(value: Any, pointer: str) -> str:
    if not isinstance(value, str) or not value:
        raise SchemaError(f"{pointer}: must be a nonempty string")
    if PurePosixPath(value).is_absolute():
        raise SchemaError(f"{pointer}: must be a relative path, got {value!r}")
    return value


def read_bundle(path: str | Path) -> Bundle:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read prompt file {path}: {exc}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"/: malformed JSON: {exc}") from None
    top = _object(obj, TOP_KEYS, "/")
    if not isinstance(top["image_id"], str) or not top["image_id"]:
        raise SchemaError("/image_id: must be a nonempty string")
    width = _int(top["image_width"], "/image_width")
    height = _int(top["image_height"], "/image_height")
    if width < 1:
        raise SchemaError("/image_width: must be an integer >= 1")
    if height < 1:
        raise SchemaError("/image_height: must be an integer >= 1")
    raw_points = top["points"]
    if not isinstance(raw_points, list):
        raise SchemaError("/points: must be an array")
    points = []
    for i, entry in enumerate(raw_points):
        ptr = f"/points/{i}"
        entry = _object(entry, POINT_KEYS, ptr)
        x = _int(entry["x"], f"{ptr}/x")
        y = _int(entry["y"], f"{ptr}/y")
        label = _int(entry["label"], f"{ptr}/label")
        if label not in (0, 1):
            raise SchemaError(f"{ptr}/label: must be 0 or 1, got {label}")
        if not 0 <= x < width:
            raise SchemaError(f"{ptr}/x: {x} out of bounds for width {width}")
        if not 0 <= y < height:
            raise SchemaError(f"{ptr}/y: {y} out of bounds for height {height}")
        points.append((x, y, label))
    source = _object(top["source"], SOURCE_KEYS, "/source")
    if not isinstance(source["method"], str) or not source["method"]:
        raise SchemaError("/source/method: must be a nonempty string")
    _int(source["unet_epochs"], "/source/unet_epochs")
    _int(source["train_fraction"], "/source/train_fraction")
    return Bundle(
        image_id=top["image_id"],
        image_path=_relative_path(top["image_path"], "/image_path"),
        image_width=width,
        image_height=height,
        points=tuple(points),
        lowres_mask_path=_relative_path(top["lowres_mask_path"], "/lowres_mask_path"),
        source=dict(source),
    )
