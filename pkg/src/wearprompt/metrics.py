"""Segmentation scores, overlay categorization, composite loss, one-way ANOVA.

Two overlap scores are always computed side by side: `eq1_score` is the
Dice-form ratio 2|P∩T| / (|P|+|T|) and `jaccard` is |P∩T| / |P∪T|.  Reports
carry both because the two are routinely conflated; they satisfy
eq1 = 2J / (1+J).  Masks that are both empty score 1.0 (perfect agreement).
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image
from scipy import special

from .errors import ConfigError, DimensionMismatchError, StatisticsError
from .mask import BinaryMask, GrayMask

__all__ = [
    "PixelCounts",
    "ScoreSet",
    "AnovaResult",
    "LossBreakdown",
    "OverlayCategory",
    "OVERLAY_COLORS",
    "score",
    "overlay",
    "save_overlay",
    "composite_loss",
    "anova_oneway",
]


@dataclass(frozen=True)
class PixelCounts:
    intersection: int
    pred_only: int
    truth_only: int
    background: int

    @property
    def total(self) -> int:
        return self.intersection + self.pred_only + self.truth_only + self.background


@dataclass(frozen=True)
class ScoreSet:
    eq1_score: float
    jaccard: float
    pixel_counts: PixelCounts


@dataclass(frozen=True)
class AnovaResult:
    f_statistic: float
    p_value: float
    df_between: int
    df_within: int


@dataclass(frozen=True)
class LossBreakdown:
    bce: float
    overlap: float
    total: float


def _check_same_shape(a, b, what: str) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(
            f"{what}: pred is {a.shape[0]}x{a.shape[1]}, truth is {b.shape[0]}x{b.shape[1]}"
        )


def score(pred: BinaryMask, truth: BinaryMask) -> ScoreSet:
    """Dice-form and Jaccard overlap of pred against truth."""
    _check_same_shape(pred, truth, "score")
    p, t = pred.data, truth.data
    inter = int((p & t).sum())
    pred_only = int((p & ~t).sum())
    truth_only = int((~p & t).sum())
    background = p.size - inter - pred_only - truth_only
    union = inter + pred_only + truth_only
    if union == 0:
        eq1, jac = 1.0, 1.0
    else:
        eq1 = 2 * inter / (2 * inter + pred_only + truth_only)
        jac = inter / union
    return ScoreSet(
        eq1_score=eq1,
        jaccard=jac,
        pixel_counts=PixelCounts(inter, pred_only, truth_only, background),
    )


class OverlayCategory(IntEnum):
    BACKGROUND = 0
    CORRECT = 1
    PRED_ONLY = 2
    MISSED = 3


OVERLAY_COLORS = {
    OverlayCategory.BACKGROUND: (0, 0, 0),
    OverlayCategory.CORRECT: (0, 255, 0),
    OverlayCategory.PRED_ONLY: (255, 0, 0),
    OverlayCategory.MISSED: (255, 255, 0),
}


def overlay(pred: BinaryMask, truth: BinaryMask) -> np.ndarray:
    """Per-pixel OverlayCategory codes as a uint8 grid."""
    _check_same_shape(pred, truth, "overlay")
    p, t = pred.data, truth.data
    grid = np.zeros(p.shape, dtype=np.uint8)
    grid[p & t] = OverlayCategory.CORRECT
    grid[p & ~t] = OverlayCategory.PRED_ONLY
    grid[~p & t] = OverlayCategory.MISSED
    return grid


def save_overlay(pred: BinaryMask, truth: BinaryMask, path: str | Path) -> None:
    """Write the category grid as an RGB PNG (green/red/yellow on black)."""
    grid = overlay(pred, truth)
    palette = np.zeros((4, 3), dtype=np.uint8)
    for cat, rgb in OVERLAY_COLORS.items():
        palette[cat] = rgb
    Image.fromarray(palette[grid], mode="RGB").save(path, format="PNG")


def composite_loss(
    pred_prob: GrayMask, truth: BinaryMask, epsilon: float = 1e-7
) -> LossBreakdown:
    """Summed BCE plus (1 - soft Dice overlap), probabilities clamped to
    [epsilon, 1-epsilon]."""
    _check_same_shape(pred_prob, truth, "composite_loss")
    if not 0.0 < epsilon < 0.5:
        raise ConfigError(f"epsilon must be in (0, 0.5), got {epsilon}")
    y = np.clip(pred_prob.data, epsilon, 1.0 - epsilon)
    g = truth.data.astype(np.float64)
    bce = float(-(g * np.log(y) + (1.0 - g) * np.log1p(-y)).sum())
    overlap = 1.0 - 2.0 * float((y * g).sum()) / float((y + g).sum())
    return LossBreakdown(bce=bce, overlap=overlap, total=bce + overlap)


def anova_oneway(groups: Sequence[Sequence[float]]) -> AnovaResult:
    """Classic one-way fixed-effects F test.

    p-value from the F survival function via the regularized incomplete beta;
    zero within-group variance with separated means yields F = inf, p = 0.0.
    """
    if len(groups) < 2:
        raise StatisticsError(f"need at least 2 groups, got {len(groups)}")
    arrays = []
    for i, g in enumerate(groups):
        arr = np.asarray(g, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 2:
            raise StatisticsError(f"group {i} needs at least 2 samples, got {arr.size}")
        arrays.append(arr)
    total_n = sum(a.size for a in arrays)
    k = len(arrays)
    grand_mean = sum(float(a.sum()) for a in arrays) / total_n
    ss_between = sum(a.size * (float(a.mean()) - grand_mean) ** 2 for a in arrays)
    ss_within = sum(float(((a - a.mean()) ** 2).sum()) for a in arrays)
    if ss_between == 0.0 and ss_within == 0.0:
        raise StatisticsError("all samples are identical; variance is zero")
    df_between = k - 1
    df_within = total_n - k
    if ss_within == 0.0:
        return AnovaResult(
            f_statistic=float("inf"), p_value=0.0, df_between=df_between, df_within=df_within
        )
    f = (ss_between / df_between) / (ss_within / df_within)
    x = df_within / (df_within + df_between * f)
    p = float(special.betainc(df_within / 2.0, df_between / 2.0, x))
    return AnovaResult(f_statistic=f, p_value=p, df_between=df_between, df_within=df_within)
