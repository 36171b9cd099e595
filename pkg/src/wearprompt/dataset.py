"""Dataset manifests, area-stratified splitting, subsetting, augmentations.

A manifest is a UTF-8 CSV with header `image_path,label_path,tool_id` and
relative paths.  Splits and subsets operate per tool and are driven entirely
by explicit integer seeds; identical seeds give identical outputs.

Augmentation applies one seeded random draw (horizontal flip, vertical flip,
rotation angle, per-axis translation) identically to an image and its mask:
bilinear resampling for the image, nearest-neighbor for the mask so binarity
survives.  A draw of no flips, angle 0 and translation 0 is an exact identity.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import ConfigError, DimensionMismatchError
from .mask import BinaryMask, load_mask

__all__ = [
    "ManifestEntry",
    "DatasetManifest",
    "read_manifest",
    "write_manifest",
    "validate_manifest",
    "stratified_split",
    "subset",
    "AugmentSpec",
    "AugmentDraw",
    "draw_augment",
    "apply_augment",
    "augment_pair",
]

MANIFEST_HEADER = ("image_path", "label_path", "tool_id")
SUBSET_FRACTIONS = (20, 40, 60, 80, 100)


class ManifestEntry(NamedTuple):
    image_path: str
    label_path: str
    tool_id: str


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        for i, e in enumerate(self.entries):
            if not e.image_path or not e.label_path:
                raise ConfigError(f"manifest entry {i}: empty path")
            if not e.tool_id:
                raise ConfigError(f"manifest entry {i}: empty tool_id")

    def __len__(self) -> int:
        return len(self.entries)

    def tool_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for e in self.entries:
            counts[e.tool_id] = counts.get(e.tool_id, 0) + 1
        return dict(sorted(counts.items()))


def read_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from None
    if not rows or tuple(rows[0]) != MANIFEST_HEADER:
        raise ConfigError(
            f"manifest {path}: first row must be {','.join(MANIFEST_HEADER)}"
        )
    entries = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ConfigError(f"manifest {path} line {lineno}: expected 3 fields, got {len(row)}")
        entries.append(ManifestEntry(*row))
    try:
        return DatasetManifest(entries=tuple(entries))
    except ConfigError as exc:
        raise ConfigError(f"manifest {path}: {exc}") from None


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        writer.writerows(manifest.entries)


def validate_manifest(manifest: DatasetManifest, base_dir: str | Path) -> None:
    """Check that every label loads as a mask matching its image's size."""
    base = Path(base_dir)
    for e in manifest.entries:
        label = load_mask(base / e.label_path)
        with Image.open(base / e.image_path) as img:
            w, h = img.size
        if (h, w) != label.shape:
            raise DimensionMismatchError(
                f"{e.label_path} is {label.height}x{label.width}, "
                f"image {e.image_path} is {h}x{w}"
            )


def _entries_by_tool(manifest: DatasetManifest) -> dict[str, list[int]]:
    by_tool: dict[str, list[int]] = {}
    for i, e in enumerate(manifest.entries):
        by_tool.setdefault(e.tool_id, []).append(i)
    return dict(sorted(by_tool.items()))


def _largest_remainder(target: int, sizes: list[int]) -> list[int]:
    """Apportion `target` draws over bins proportionally to their sizes."""
    total = sum(sizes)
    quotas = [target * s / total for s in sizes]
    takes = [math.floor(q) for q in quotas]
    leftover = target - sum(takes)
    by_remainder = sorted(range(len(sizes)), key=lambda i: (-(quotas[i] - takes[i]), i))
    for i in by_remainder[:leftover]:
        takes[i] += 1
    return takes


def stratified_split(
    manifest: DatasetManifest,
    test_fraction: float = 0.20,
    bins: int = 5,
    seed: int = 0,
    base_dir: str | Path = ".",
) -> tuple[DatasetManifest, DatasetManifest]:
    """Per-tool wear-area-stratified split into (train, test).

    Entries are sorted by label foreground area and cut into equal-frequency
    bins; round(test_fraction * n) test entries are drawn across the bins by
    largest remainder, so the test set tracks the tool's area distribution.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError(f"test_fraction must be in (0, 1), got {test_fraction}")
    if bins < 2:
        raise ConfigError(f"bins must be >= 2, got {bins}")
    if len(manifest) == 0:
        raise ConfigError("empty manifest")
    base = Path(base_dir)
    rng = np.random.default_rng(seed)
    test_indices: set[int] = set()
    for tool_id, indices in _entries_by_tool(manifest).items():
        n = len(indices)
        if n < bins:
            raise ConfigError(f"tool {tool_id!r} has {n} images, fewer than {bins} bins")
        areas = [
            load_mask(base / manifest.entries[i].label_path).foreground_count()
            for i in indices
        ]
        by_area = sorted(range(n), key=lambda j: (areas[j], j))
        bin_chunks = [list(chunk) for chunk in np.array_split(by_area, bins)]
        target = math.floor(test_fraction * n + 0.5)
        takes = _largest_remainder(target, [len(c) for c in bin_chunks])
        for chunk, take in zip(bin_chunks, takes):
            for j in rng.choice(len(chunk), size=take, replace=False):
                test_indices.add(indices[chunk[int(j)]])
    train = tuple(e for i, e in enumerate(manifest.entries) if i not in test_indices)
    test = tuple(e for i, e in enumerate(manifest.entries) if i in test_indices)
    return DatasetManifest(entries=train), DatasetManifest(entries=test)


def subset(manifest: DatasetManifest, fraction: int, seed: int = 0) -> DatasetManifest:
    """Per-tool floor(fraction% of count) sample (minimum 1), order-preserving."""
    if fraction not in SUBSET_FRACTIONS:
        raise ConfigError(
            f"fraction must be one of {SUBSET_FRACTIONS}, got {fraction}"
        )
    if len(manifest) == 0:
        raise ConfigError("empty manifest")
    if fraction == 100:
        return manifest
    rng = np.random.default_rng(seed)
    keep: set[int] = set()
    for _tool_id, indices in _entries_by_tool(manifest).items():
        take = max(1, (fraction * len(indices)) // 100)
        for j in rng.choice(len(indices), size=take, replace=False):
            keep.add(indices[int(j)])
    return DatasetManifest(
        entries=tuple(e for i, e in enumerate(manifest.entries) if i in keep)
    )


@dataclass(frozen=True)
class AugmentSpec:
    """Augmentation ranges: flip probabilities, degree and per-axis
    translation-fraction intervals, plus the base seed."""

    hflip_prob: float = 0.5
    vflip_prob: float = 0.5
    rotate_deg: tuple[float, float] = (-20.0, 20.0)
    translate_frac: tuple[float, float] = (-0.10, 0.10)
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("hflip_prob", "vflip_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {p}")
        for name in ("rotate_deg", "translate_frac"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ConfigError(f"{name} range is inverted: ({lo}, {hi})")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")


@dataclass(frozen=True)
class AugmentDraw:
    hflip: bool
    vflip: bool
    angle_deg: float
    translate_r: float
    translate_c: float

    @property
    def is_identity(self) -> bool:
        return (
            not self.hflip
            and not self.vflip
            and self.angle_deg == 0.0
            and self.translate_r == 0.0
            and self.translate_c == 0.0
        )


def draw_augment(spec: AugmentSpec, draw_seed: int) -> AugmentDraw:
    """One seeded draw; fixed order: hflip, vflip, angle, row shift, col shift."""
    if draw_seed < 0:
        raise ConfigError(f"draw_seed must be >= 0, got {draw_seed}")
    rng = np.random.default_rng([spec.seed, draw_seed])
    return AugmentDraw(
        hflip=bool(rng.random() < spec.hflip_prob),
        vflip=bool(rng.random() < spec.vflip_prob),
        angle_deg=float(rng.uniform(*spec.rotate_deg)),
        translate_r=float(rng.uniform(*spec.translate_frac)),
        translate_c=float(rng.uniform(*spec.translate_frac)),
    )


def _warp(arr: np.ndarray, matrix: np.ndarray, offset: np.ndarray, order: int) -> np.ndarray:
    if arr.ndim == 2:
        return ndimage.affine_transform(
            arr, matrix, offset=offset, order=order, mode="constant", cval=0
        )
    channels = [
        ndimage.affine_transform(
            arr[:, :, c], matrix, offset=offset, order=order, mode="constant", cval=0
        )
        for c in range(arr.shape[2])
    ]
    return np.stack(channels, axis=2)


def apply_augment(
    image: np.ndarray, mask: BinaryMask, draw: AugmentDraw
) -> tuple[np.ndarray, BinaryMask]:
    """Apply one draw to an image/mask pair: flips, then a rotation about the
    center combined with translation.  Flips are exact slicing; the warp uses
    bilinear resampling for the image and nearest-neighbor for the mask."""
    image = np.asarray(image)
    if image.ndim not in (2, 3):
        raise ValueError(f"image must be 2-D or 3-D, got {image.ndim}-D")
    if image.shape[:2] != mask.shape:
        raise DimensionMismatchError(
            f"image is {image.shape[0]}x{image.shape[1]}, mask is {mask.height}x{mask.width}"
        )
    img = image
    msk = mask.data
    if draw.hflip:
        img = img[:, ::-1]
        msk = msk[:, ::-1]
    if draw.vflip:
        img = img[::-1]
        msk = msk[::-1]
    if draw.angle_deg == 0.0 and draw.translate_r == 0.0 and draw.translate_c == 0.0:
        return img.copy(), BinaryMask(msk)
    h, w = msk.shape
    theta = math.radians(draw.angle_deg)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    # Forward map rotates about the raster center then shifts; the sampler
    # needs the inverse: input = R.T @ output + (center - R.T @ (center + t)).
    rot = np.array([[cos_t, -sin_t], [sin_t, cos_t]])
    center = np.array([(h - 1) / 2.0, (w - 1) / 2.0])
    shift = np.array([draw.translate_r * h, draw.translate_c * w])
    matrix = rot.T
    offset = center - rot.T @ (center + shift)
    img_out = _warp(np.ascontiguousarray(img), matrix, offset, order=1)
    msk_out = _warp(np.ascontiguousarray(msk, dtype=np.uint8), matrix, offset, order=0)
    return img_out, BinaryMask(msk_out > 0)


def augment_pair(
    image: np.ndarray, mask: BinaryMask, spec: AugmentSpec, draw_seed: int
) -> tuple[np.ndarray, BinaryMask]:
    """Draw once from spec and apply; same (spec, draw_seed) -> same output."""
    return apply_augment(image, mask, draw_augment(spec, draw_seed))
