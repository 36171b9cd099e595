"""Binary mask substrate: raster types, file I/O, morphology and components.

Coordinate convention everywhere in this package: (row, col), origin at the
top-left, row grows downward.  Serialized formats that want (x, y) use
x = col, y = row and convert exactly once at the serialization boundary.

Mask file contract: 8-bit grayscale PNG or PGM (P5, maxval 255).  Foreground
is stored as 255, background as 0; loading binarizes at level >= threshold
(default 128).  Out-of-bounds pixels count as background for erosion and
contour tests.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from .errors import EmptyForegroundError, MaskFormatError

__all__ = [
    "BinaryMask",
    "GrayMask",
    "PixelPoint",
    "StructuringElement",
    "Connectivity",
    "ComponentLabels",
    "load_mask",
    "save_mask",
    "load_gray",
    "binarize",
    "connected_components",
    "contour_pixels",
    "erode",
    "centroid",
]


class PixelPoint(NamedTuple):
    """Integer pixel coordinate; compares row-major by construction."""

    row: int
    col: int


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """2-D boolean raster, True = foreground (worn)."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise ValueError(f"mask data must be 2-D, got {arr.ndim}-D")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"mask must be at least 1x1, got {arr.shape}")
        arr = arr.astype(bool) if arr.dtype != np.bool_ else arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def foreground_count(self) -> int:
        return int(self.data.sum())

    def is_empty(self) -> bool:
        return not bool(self.data.any())

    def foreground_points(self) -> list[PixelPoint]:
        rows, cols = np.nonzero(self.data)
        return [PixelPoint(int(r), int(c)) for r, c in zip(rows, cols)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    def __repr__(self) -> str:
        return f"BinaryMask({self.height}x{self.width}, fg={self.foreground_count()})"


@dataclass(frozen=True, eq=False)
class GrayMask:
    """2-D raster of probabilities in [0, 1] (the pre-binarization model output)."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"gray data must be 2-D, got {arr.ndim}-D")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"gray raster must be at least 1x1, got {arr.shape}")
        if float(arr.min()) < 0.0 or float(arr.max()) > 1.0:
            raise ValueError("gray values must lie in [0, 1]")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


class StructuringElement(Enum):
    """Fixed 3x3 erosion footprints; both contain their center."""

    CROSS3 = "cross3"
    SQUARE3 = "square3"

    @property
    def offsets(self) -> tuple[tuple[int, int], ...]:
        if self is StructuringElement.CROSS3:
            return ((0, 0), (-1, 0), (1, 0), (0, -1), (0, 1))
        return tuple((dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1))


class Connectivity(Enum):
    FOUR = 4
    EIGHT = 8


@dataclass(frozen=True)
class ComponentLabels:
    """Per-pixel component labels: 0 = background, components numbered 1..count
    in raster order of their first pixel."""

    labels: np.ndarray
    count: int


_PNG_PGM_SUFFIXES = {".png": "PNG", ".pgm": "PPM"}


def load_mask(path: str | Path, threshold: int = 128) -> BinaryMask:
    """Load an 8-bit grayscale PNG/PGM file; foreground iff level >= threshold."""
    if not 0 <= threshold <= 255:
        raise ValueError(f"threshold must be in [0, 255], got {threshold}")
    arr = _load_gray_levels(path)
    return BinaryMask(arr >= threshold)


def save_mask(mask: BinaryMask, path: str | Path) -> None:
    """Write foreground as 255, background as 0; extension picks PNG or PGM."""
    path = Path(path)
    fmt = _PNG_PGM_SUFFIXES.get(path.suffix.lower())
    if fmt is None:
        raise MaskFormatError(
            f"unsupported mask extension {path.suffix!r} (use .png or .pgm)"
        )
    img = Image.fromarray(mask.data.astype(np.uint8) * 255, mode="L")
    img.save(path, format=fmt)


def load_gray(path: str | Path) -> GrayMask:
    """Load an 8-bit grayscale file as probabilities (levels / 255)."""
    arr = _load_gray_levels(path)
    return GrayMask(arr.astype(np.float64) / 255.0)


def _load_gray_levels(path: str | Path) -> np.ndarray:
    path = Path(path)
    try:
        img = Image.open(path)
        img.load()
    except FileNotFoundError:
        raise MaskFormatError(f"cannot read mask file {path}: file not found") from None
    except UnidentifiedImageError:
        raise MaskFormatError(f"cannot read mask file {path}: not a recognized image") from None
    except OSError as exc:
        raise MaskFormatError(f"cannot read mask file {path}: {exc}") from None
    if img.format not in ("PNG", "PPM"):
        raise MaskFormatError(
            f"unsupported file format {img.format!r} for {path} (expected PNG or PGM)"
        )
    if img.mode != "L":
        if img.mode in ("I", "I;16", "I;16B", "I;16L"):
            raise MaskFormatError(
                f"unsupported bit depth in {path}: mode {img.mode!r} (expected 8-bit grayscale)"
            )
        raise MaskFormatError(
            f"unsupported color type in {path}: mode {img.mode!r} (expected 8-bit grayscale)"
        )
    return np.asarray(img, dtype=np.uint8)


def binarize(gray: GrayMask, threshold: float = 0.5) -> BinaryMask:
    """Foreground iff value >= threshold."""
    return BinaryMask(gray.data >= threshold)


_CROSS_STRUCTURE = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_SQUARE_STRUCTURE = np.ones((3, 3), dtype=bool)


def connected_components(
    mask: BinaryMask, connectivity: Connectivity = Connectivity.EIGHT
) -> ComponentLabels:
    """Label foreground components; two pixels share a label iff connected."""
    labels, count = _label_array(mask.data, connectivity)
    return ComponentLabels(labels=labels, count=count)


def _label_array(arr: np.ndarray, connectivity: Connectivity) -> tuple[np.ndarray, int]:
    structure = _CROSS_STRUCTURE if connectivity is Connectivity.FOUR else _SQUARE_STRUCTURE
    raw, count = ndimage.label(arr, structure=structure)
    if count == 0:
        return raw.astype(np.int32), 0
    # Renumber so component k is the k-th first-encountered in raster order;
    # scipy's numbering is close but not contractual.
    flat = raw.ravel()
    nonzero = np.flatnonzero(flat)
    first = np.full(count + 1, flat.size, dtype=np.int64)
    np.minimum.at(first, flat[nonzero], nonzero)
    order = np.argsort(first[1:], kind="stable")
    remap = np.zeros(count + 1, dtype=np.int32)
    remap[order + 1] = np.arange(1, count + 1, dtype=np.int32)
    return remap[raw], int(count)


def contour_pixels(mask: BinaryMask) -> set[PixelPoint]:
    """Foreground pixels with a 4-neighbor that is background or off-image."""
    contour = _contour_array(mask.data)
    rows, cols = np.nonzero(contour)
    return {PixelPoint(int(r), int(c)) for r, c in zip(rows, cols)}


def _contour_array(arr: np.ndarray) -> np.ndarray:
    padded = np.pad(arr, 1, constant_values=False)
    all_neighbors_fg = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return arr & ~all_neighbors_fg


def erode(mask: BinaryMask, se: StructuringElement = StructuringElement.SQUARE3) -> BinaryMask:
    """Morphological erosion; pixels whose footprint leaves the image are removed."""
    return BinaryMask(_erode_array(mask.data, se.offsets))


def _erode_array(arr: np.ndarray, offsets: tuple[tuple[int, int], ...]) -> np.ndarray:
    h, w = arr.shape
    padded = np.pad(arr, 1, constant_values=False)
    out = np.ones_like(arr)
    for dr, dc in offsets:
        out &= padded[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w]
    return out


def centroid(pixels: Iterable[PixelPoint]) -> tuple[float, float]:
    """Arithmetic mean of rows and of cols; pixel (r, c) is centered at (r, c)."""
    pts = list(pixels)
    if not pts:
        raise EmptyForegroundError("centroid of an empty pixel set")
    sum_r = sum(p.row for p in pts)
    sum_c = sum(p.col for p in pts)
    n = len(pts)
    return sum_r / n, sum_c / n
