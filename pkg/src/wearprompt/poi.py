"""Positive/negative point-prompt generation from binary wear masks.

Three positive-point methods, all operating per connected component:

  MS     erode the component until the next erosion would empty it, then emit
         the centroid of the last nonempty result snapped to one of its pixels
         (or every surviving pixel with ms_all_pixels).
  CoGA   emit the rounded centroid when it lands on the component; otherwise
         correct it via the nearest contour pixel and a ray cast through it.
  RCoGA  like CoGA, but instead of correcting, cut the component along the
         centroid-contour line and recurse into the pieces, yielding several
         positives for non-convex regions.

Negative points extrapolate from each positive along the four axis directions
to a fixed distance past the foreground boundary.

All arithmetic that decides a pixel is exact-integer: centroids are kept as
(sum, count) rationals, distances compared via integer numerators, rounding is
half-down per axis.  Ray directions are the only float step; they use IEEE
sqrt/divide, which is reproducible across platforms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import ndimage

from .errors import ConfigError, EmptyForegroundError
from .geometry import bresenham_line, round_half_down, round_point_half_down
from .mask import (
    BinaryMask,
    Connectivity,
    PixelPoint,
    StructuringElement,
    _contour_array,
    _erode_array,
    _label_array,
)

__all__ = [
    "PoiMethod",
    "PoiConfig",
    "PromptPoints",
    "poi_ms",
    "poi_coga",
    "poi_rcoga",
    "gen_negatives",
    "generate_prompt_points",
]


class PoiMethod(Enum):
    MS = "ms"
    COGA = "coga"
    RCOGA = "rcoga"


@dataclass(frozen=True)
class PoiConfig:
    """Knobs for point generation; defaults follow the library's conventions.

    se_shape applies to MS only; max_depth and min_segment_area to RCoGA only;
    ms_all_pixels switches MS from one representative point per component to
    the full pixel set of the last nonempty erosion.
    """

    method: PoiMethod
    se_shape: StructuringElement = StructuringElement.SQUARE3
    max_depth: int = 3
    min_segment_area: int = 8
    neg_distance: int = 10
    connectivity: Connectivity = Connectivity.EIGHT
    ms_all_pixels: bool = False

    def __post_init__(self) -> None:
        if not isinstance(self.method, PoiMethod):
            raise ConfigError(f"method must be a PoiMethod, got {self.method!r}")
        if self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.min_segment_area < 1:
            raise ConfigError(f"min_segment_area must be >= 1, got {self.min_segment_area}")
        if self.neg_distance < 1:
            raise ConfigError(f"neg_distance must be >= 1, got {self.neg_distance}")


@dataclass(frozen=True)
class PromptPoints:
    positives: tuple[PixelPoint, ...]
    negatives: tuple[PixelPoint, ...]


@dataclass(frozen=True)
class _Segment:
    """A connected pixel region held as a tight boolean crop plus its offset."""

    crop: np.ndarray
    off_r: int
    off_c: int

    @property
    def area(self) -> int:
        return int(self.crop.sum())

    def centroid_sums(self) -> tuple[int, int, int]:
        """(sum of global rows, sum of global cols, pixel count), all exact."""
        rows, cols = np.nonzero(self.crop)
        n = rows.size
        return int(rows.sum()) + self.off_r * n, int(cols.sum()) + self.off_c * n, int(n)

    def contains(self, p: PixelPoint) -> bool:
        r, c = p.row - self.off_r, p.col - self.off_c
        h, w = self.crop.shape
        return 0 <= r < h and 0 <= c < w and bool(self.crop[r, c])

    def pixel_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Global (rows, cols) of the segment's pixels, raster order."""
        rows, cols = np.nonzero(self.crop)
        return rows.astype(np.int64) + self.off_r, cols.astype(np.int64) + self.off_c

    def contour_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Global (rows, cols) of the segment's contour pixels, raster order."""
        rows, cols = np.nonzero(_contour_array(self.crop))
        return rows.astype(np.int64) + self.off_r, cols.astype(np.int64) + self.off_c


def _segments_of(mask_data: np.ndarray, connectivity: Connectivity) -> list[_Segment]:
    """Connected components as isolated crops, in first-pixel raster order."""
    labels, count = _label_array(mask_data, connectivity)
    slices = ndimage.find_objects(labels)
    out = []
    for k in range(1, count + 1):
        sl = slices[k - 1]
        out.append(
            _Segment(crop=labels[sl] == k, off_r=sl[0].start, off_c=sl[1].start)
        )
    return out


def _nearest_in_arrays(
    rows: np.ndarray, cols: np.ndarray, row_num: int, col_num: int, den: int
) -> PixelPoint:
    """Exact nearest of (rows[i], cols[i]) to the rational target point.

    Arrays must be in raster order; the first minimal squared distance then
    coincides with the row-major tie-break.
    """
    bound = max(int(np.abs(rows).max()), int(np.abs(cols).max()), 1)
    if den * bound + max(abs(row_num), abs(col_num)) < 2**31:
        dr = den * rows - row_num
        dc = den * cols - col_num
        idx = int(np.argmin(dr * dr + dc * dc))
    else:
        best = None
        idx = 0
        for i in range(rows.size):
            d2 = (den * int(rows[i]) - row_num) ** 2 + (den * int(cols[i]) - col_num) ** 2
            if best is None or d2 < best:
                best, idx = d2, i
    return PixelPoint(int(rows[idx]), int(cols[idx]))


def _ray_endpoint(origin: PixelPoint, dir_r: int, dir_c: int, span: int) -> PixelPoint:
    """Integer endpoint ~span pixels from origin along (dir_r, dir_c).

    The offset is rounded before being added to the origin, so the endpoint
    (and with it the rasterized ray) is translation-equivariant exactly.
    """
    length = math.hypot(dir_r, dir_c)
    return PixelPoint(
        origin.row + round_half_down(dir_r / length * span),
        origin.col + round_half_down(dir_c / length * span),
    )


def _coga_segment(seg: _Segment, image_shape: tuple[int, int]) -> PixelPoint:
    """CoGA rule on one connected segment; always returns a segment pixel."""
    sum_r, sum_c, n = seg.centroid_sums()
    center = round_point_half_down(sum_r, sum_c, n)
    if seg.contains(center):
        return center
    crows, ccols = seg.contour_arrays()
    p1 = _nearest_in_arrays(crows, ccols, sum_r, sum_c, n)
    # Exact ray direction: p1 minus the rational centroid, scaled by n.
    dir_r = n * p1.row - sum_r
    dir_c = n * p1.col - sum_c
    span = image_shape[0] + image_shape[1] + 2
    end = _ray_endpoint(p1, dir_r, dir_c, span)
    p2 = p1
    for q in bresenham_line(p1, end)[1:]:
        if not seg.contains(q):
            break
        p2 = q
    mid = round_point_half_down(p1.row + p2.row, p1.col + p2.col, 2)
    if seg.contains(mid):
        return mid
    rows, cols = seg.pixel_arrays()
    return _nearest_in_arrays(rows, cols, mid.row, mid.col, 1)


def _cut_segment(seg: _Segment, connectivity: Connectivity) -> list[_Segment] | None:
    """Remove the centroid-to-contour line; None when the centroid is inside
    (no cut applies) and [] when the line wipes the segment out."""
    sum_r, sum_c, n = seg.centroid_sums()
    center = round_point_half_down(sum_r, sum_c, n)
    if seg.contains(center):
        return None
    crows, ccols = seg.contour_arrays()
    p1 = _nearest_in_arrays(crows, ccols, sum_r, sum_c, n)
    dir_r = n * p1.row - sum_r
    dir_c = n * p1.col - sum_c
    h, w = seg.crop.shape
    span = h + w + 2
    remaining = seg.crop.copy()
    for endpoint in (
        _ray_endpoint(p1, dir_r, dir_c, span),
        _ray_endpoint(p1, -dir_r, -dir_c, span),
    ):
        for q in bresenham_line(p1, endpoint):
            r, c = q.row - seg.off_r, q.col - seg.off_c
            if 0 <= r < h and 0 <= c < w:
                remaining[r, c] = False
    if not remaining.any():
        return []
    return [
        _Segment(crop=sub.crop, off_r=sub.off_r + seg.off_r, off_c=sub.off_c + seg.off_c)
        for sub in _segments_of(remaining, connectivity)
    ]


def _rcoga_segment(
    seg: _Segment, depth: int, cfg: PoiConfig, image_shape: tuple[int, int]
) -> list[PixelPoint]:
    if depth == 0:
        return [_coga_segment(seg, image_shape)]
    sum_r, sum_c, n = seg.centroid_sums()
    center = round_point_half_down(sum_r, sum_c, n)
    if seg.contains(center):
        return [center]
    subs = _cut_segment(seg, cfg.connectivity)
    if not subs:
        # The cut line covered the whole segment; correct instead of cutting.
        return [_coga_segment(seg, image_shape)]
    points: list[PixelPoint] = []
    for sub in subs:
        if sub.area >= cfg.min_segment_area:
            points.extend(_rcoga_segment(sub, depth - 1, cfg, image_shape))
        else:
            points.append(_coga_segment(sub, image_shape))
    return points


def _require_foreground(mask: BinaryMask) -> None:
    if mask.is_empty():
        raise EmptyForegroundError("mask has no foreground pixels")


def poi_ms(mask: BinaryMask, cfg: PoiConfig) -> list[PixelPoint]:
    """Morphological-shrink positives, one per component (or its full center
    line with cfg.ms_all_pixels)."""
    _require_foreground(mask)
    offsets = cfg.se_shape.offsets
    points: list[PixelPoint] = []
    for seg in _segments_of(mask.data, cfg.connectivity):
        current = seg.crop
        while True:
            nxt = _erode_array(current, offsets)
            if not nxt.any():
                break
            current = nxt
        shrunk = _Segment(crop=current, off_r=seg.off_r, off_c=seg.off_c)
        rows, cols = shrunk.pixel_arrays()
        if cfg.ms_all_pixels:
            points.extend(PixelPoint(int(r), int(c)) for r, c in zip(rows, cols))
        else:
            sum_r, sum_c, n = shrunk.centroid_sums()
            points.append(_nearest_in_arrays(rows, cols, sum_r, sum_c, n))
    return points


def poi_coga(mask: BinaryMask, cfg: PoiConfig) -> list[PixelPoint]:
    """Center-of-gravity positives with contour-ray correction, one per
    component."""
    _require_foreground(mask)
    return [
        _coga_segment(seg, mask.shape) for seg in _segments_of(mask.data, cfg.connectivity)
    ]


def poi_rcoga(mask: BinaryMask, cfg: PoiConfig) -> list[PixelPoint]:
    """Recursive line-cut positives; several points per non-convex component."""
    _require_foreground(mask)
    points: list[PixelPoint] = []
    for seg in _segments_of(mask.data, cfg.connectivity):
        points.extend(_rcoga_segment(seg, cfg.max_depth, cfg, mask.shape))
    return list(dict.fromkeys(points))


_AXIS_DIRECTIONS = ((0, 1), (0, -1), (1, 0), (-1, 0))


def gen_negatives(
    mask: BinaryMask, positives: list[PixelPoint], cfg: PoiConfig
) -> list[PixelPoint]:
    """Extrapolate each positive past the foreground run along the four axes.

    Candidates landing out of bounds or on foreground are dropped; the result
    is deduplicated preserving order (per positive, then +col, -col, +row,
    -row).
    """
    data = mask.data
    h, w = data.shape
    out: list[PixelPoint] = []
    for p in positives:
        if not (0 <= p.row < h and 0 <= p.col < w) or not data[p.row, p.col]:
            raise ValueError(f"positive point {tuple(p)} is not on foreground")
        for dr, dc in _AXIS_DIRECTIONS:
            if dr == 0:
                run = data[p.row, p.col :: dc] if dc > 0 else data[p.row, p.col :: -1]
            else:
                run = data[p.row :: dr, p.col] if dr > 0 else data[p.row :: -1, p.col]
            gaps = np.flatnonzero(~run)
            steps = int(gaps[0]) if gaps.size else int(run.size)
            cand = PixelPoint(
                p.row + dr * (steps - 1 + cfg.neg_distance),
                p.col + dc * (steps - 1 + cfg.neg_distance),
            )
            if 0 <= cand.row < h and 0 <= cand.col < w and not data[cand.row, cand.col]:
                out.append(cand)
    return list(dict.fromkeys(out))


_DISPATCH = {
    PoiMethod.MS: poi_ms,
    PoiMethod.COGA: poi_coga,
    PoiMethod.RCOGA: poi_rcoga,
}


def generate_prompt_points(mask: BinaryMask, cfg: PoiConfig) -> PromptPoints:
    """Positives via cfg.method plus axis-extrapolated negatives."""
    _require_foreground(mask)
    positives = _DISPATCH[cfg.method](mask, cfg)
    negatives = gen_negatives(mask, positives, cfg)
    return PromptPoints(positives=tuple(positives), negatives=tuple(negatives))
