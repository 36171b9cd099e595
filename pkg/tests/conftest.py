"""Shared mask generators for the test suite.

All generators return plain boolean numpy arrays; tests wrap them in
BinaryMask as needed.  Everything is seeded and deterministic.
"""
from __future__ import annotations

import numpy as np
import pytest


def disk(h: int, w: int, cr: float, cc: float, radius: float) -> np.ndarray:
    rr, cc_grid = np.mgrid[0:h, 0:w]
    return (rr - cr) ** 2 + (cc_grid - cc) ** 2 <= radius**2


def ellipse(h: int, w: int, cr: float, cc: float, ar: float, ac: float) -> np.ndarray:
    rr, cc_grid = np.mgrid[0:h, 0:w]
    return ((rr - cr) / ar) ** 2 + ((cc_grid - cc) / ac) ** 2 <= 1.0


def thin_ring(h: int, w: int, cr: float, cc: float, radius: float, band: float = 0.6) -> np.ndarray:
    rr, cc_grid = np.mgrid[0:h, 0:w]
    dist = np.sqrt((rr - cr) ** 2 + (cc_grid - cc) ** 2)
    return np.abs(dist - radius) <= band


def annulus(h: int, w: int, cr: float, cc: float, r_out: float, r_in: float) -> np.ndarray:
    return disk(h, w, cr, cc, r_out) & ~disk(h, w, cr, cc, r_in)


def rect(h: int, w: int, r0: int, r1: int, c0: int, c1: int) -> np.ndarray:
    arr = np.zeros((h, w), dtype=bool)
    arr[r0:r1, c0:c1] = True
    return arr


def l_shape_tiny() -> np.ndarray:
    arr = np.zeros((3, 3), dtype=bool)
    for r, c in ((0, 0), (0, 1), (0, 2), (1, 0), (2, 0)):
        arr[r, c] = True
    return arr


def l_shape_large(size: int = 30, arm: int = 10) -> np.ndarray:
    arr = np.zeros((size, size), dtype=bool)
    arr[2 : size - 2, 2 : size - 2] = True
    arr[2 + arm : size - 2, 2 + arm : size - 2] = False
    return arr


def u_shape(h: int = 24, w: int = 24) -> np.ndarray:
    arr = rect(h, w, 4, h - 4, 4, w - 4)
    arr[4 : h - 10, 9 : w - 9] = False
    return arr


def horizontal_line(h: int = 15, w: int = 25, row: int = 7) -> np.ndarray:
    arr = np.zeros((h, w), dtype=bool)
    arr[row, 3 : w - 3] = True
    return arr


def vertical_line(h: int = 25, w: int = 15, col: int = 7) -> np.ndarray:
    arr = np.zeros((h, w), dtype=bool)
    arr[3 : h - 3, col] = True
    return arr


def diagonal_line(n: int = 21) -> np.ndarray:
    arr = np.zeros((n, n), dtype=bool)
    for i in range(2, n - 2):
        arr[i, i] = True
    return arr


def two_blobs(h: int = 32, w: int = 48) -> np.ndarray:
    return disk(h, w, h / 2, 10, 6) | disk(h, w, h / 2, w - 11, 7)


def random_blobs(rng: np.random.Generator, h: int, w: int, max_blobs: int = 4) -> np.ndarray:
    """Union of 1..max_blobs random ellipses; always nonempty."""
    arr = np.zeros((h, w), dtype=bool)
    for _ in range(int(rng.integers(1, max_blobs + 1))):
        cr = rng.uniform(0.2 * h, 0.8 * h)
        cc = rng.uniform(0.2 * w, 0.8 * w)
        ar = rng.uniform(2.0, max(2.5, h / 4))
        ac = rng.uniform(2.0, max(2.5, w / 4))
        arr |= ellipse(h, w, cr, cc, ar, ac)
    return arr


def blob_with_hole(rng: np.random.Generator, size: int) -> np.ndarray:
    cr = rng.uniform(0.4 * size, 0.6 * size)
    cc = rng.uniform(0.4 * size, 0.6 * size)
    outer = rng.uniform(size * 0.25, size * 0.4)
    inner = outer * rng.uniform(0.5, 0.8)
    return annulus(size, size, cr, cc, outer, inner)


def fixture_masks() -> list[np.ndarray]:
    """Deterministic shape zoo (>= 30 masks) for oracle-equivalence tests."""
    masks = [
        thin_ring(24, 24, 11.5, 11.5, 8.0),
        thin_ring(33, 31, 16.0, 14.0, 10.0),
        thin_ring(40, 40, 20.0, 20.0, 13.0, band=0.75),
        annulus(40, 40, 19.5, 19.5, 14.0, 9.0),
        annulus(48, 48, 24.0, 22.0, 16.0, 8.0),
        l_shape_tiny(),
        l_shape_large(30, 10),
        l_shape_large(41, 25),
        u_shape(),
        u_shape(30, 22),
        horizontal_line(),
        vertical_line(),
        diagonal_line(),
        two_blobs(),
        two_blobs(40, 64),
        rect(5, 5, 0, 5, 0, 5),
        rect(9, 9, 3, 6, 3, 6),
        disk(21, 21, 10, 10, 7.5),
    ]
    rng = np.random.default_rng(409)
    for k in range(8):
        size = int(rng.integers(32, 97))
        masks.append(random_blobs(rng, size, size))
    for k in range(6):
        size = int(rng.integers(36, 80))
        masks.append(blob_with_hole(rng, size))
    assert len(masks) >= 30
    return masks


@pytest.fixture(scope="session")
def shape_zoo() -> list[np.ndarray]:
    return fixture_masks()


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    """Collect a criterion result for the end-of-run summary (prints live too)."""
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.line(line)
