"""Exact integer geometry helpers.

Everything here is deterministic across platforms: rounding is defined on
integer ratios, distance comparisons use exact squared numerators, and line
rasterization is the classic integer error-accumulator walk.  Floats appear
only where the result is provably unaffected by representation error.
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .mask import PixelPoint

__all__ = [
    "ceil_div",
    "round_half_down",
    "round_half_down_ratio",
    "round_point_half_down",
    "bresenham_line",
    "nearest_pixel",
    "midpoint_half_down",
]


def ceil_div(num: int, den: int) -> int:
    """Exact ceil(num / den) for integers, den > 0."""
    if den <= 0:
        raise ValueError(f"denominator must be positive, got {den}")
    return -((-num) // den)


def round_half_down(x: float) -> int:
    """Round to nearest integer, exact halves going down: 2.5 -> 2, -2.5 -> -3."""
    return math.ceil(x - 0.5)


def round_half_down_ratio(num: int, den: int) -> int:
    """round_half_down(num / den) computed exactly on integers, den > 0.

    ceil(num/den - 1/2) == ceil((2*num - den) / (2*den)).
    """
    return ceil_div(2 * num - den, 2 * den)


def round_point_half_down(row_num: int, col_num: int, den: int) -> PixelPoint:
    """Round the rational point (row_num/den, col_num/den) per coordinate."""
    return PixelPoint(round_half_down_ratio(row_num, den), round_half_down_ratio(col_num, den))


def bresenham_line(start: PixelPoint, end: PixelPoint) -> list[PixelPoint]:
    """All-octant integer line from start to end, both endpoints included.

    Standard error-accumulator walk; each step moves one pixel along the
    major axis and the pixel chain is 8-connected.
    """
    x, y = start.col, start.row
    x1, y1 = end.col, end.row
    dx = abs(x1 - x)
    sx = 1 if x < x1 else -1
    dy = -abs(y1 - y)
    sy = 1 if y < y1 else -1
    err = dx + dy
    points = [PixelPoint(y, x)]
    while x != x1 or y != y1:
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy
        points.append(PixelPoint(y, x))
    return points


def nearest_pixel(
    candidates: Iterable[PixelPoint] | Sequence[PixelPoint],
    row_num: int,
    col_num: int,
    den: int,
) -> PixelPoint:
    """Candidate closest to the rational point (row_num/den, col_num/den).

    Distances are compared via the exact integer numerators
    (den*r - row_num)^2 + (den*c - col_num)^2; ties break row-major
    (smallest row, then smallest col).
    """
    pts = candidates if isinstance(candidates, list) else list(candidates)
    if not pts:
        raise ValueError("nearest_pixel over an empty candidate set")
    if den <= 0:
        raise ValueError(f"denominator must be positive, got {den}")
    rows = np.fromiter((p.row for p in pts), dtype=np.int64, count=len(pts))
    cols = np.fromiter((p.col for p in pts), dtype=np.int64, count=len(pts))
    bound = max(int(np.abs(rows).max()), int(np.abs(cols).max()), 1)
    if den * bound + max(abs(row_num), abs(col_num)) < 2**31:
        dr = den * rows - row_num
        dc = den * cols - col_num
        d2 = dr * dr + dc * dc
        best = int(d2.min())
        idx = np.nonzero(d2 == best)[0]
        chosen = min((pts[int(i)] for i in idx), key=lambda p: (p.row, p.col))
        return PixelPoint(int(chosen.row), int(chosen.col))
    # Arbitrary-precision fallback for rasters too large for int64 numerators.
    return min(
        pts,
        key=lambda p: ((den * p.row - row_num) ** 2 + (den * p.col - col_num) ** 2, p.row, p.col),
    )


def midpoint_half_down(a: PixelPoint, b: PixelPoint) -> PixelPoint:
    """Pixel midpoint of a and b, each coordinate rounded half-down."""
    return PixelPoint(
        round_half_down_ratio(a.row + b.row, 2),
        round_half_down_ratio(a.col + b.col, 2),
    )
