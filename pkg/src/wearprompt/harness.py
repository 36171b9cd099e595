"""Two-phase evaluation harness: prompt generation, refinement, scoring.

Phase 1 sweeps point methods over one coarse-mask directory; phase 2 sweeps a
training factor (train_fraction or unet_epochs) over one directory per factor
value with a fixed method.  Both score the coarse mask (baseline) and the
refiner's output (refined) against ground truth, aggregate per group, and run
a one-way ANOVA: across methods on refined scores in phase 1, across the
swept factor on per-image deltas in phase 2.

The refiner is either the string "identity" (refined mask = coarse mask) or
an argv prefix invoked as `prefix prompt.json image_path out_mask_path`; exit
0 and a readable output mask mean success.  Per-image failures are recorded
in the report and never abort the sweep.

Aggregation sorts records canonically first, so every report value is
invariant under record order, and floats are written with Python's
shortest-roundtrip formatting so a re-ingested records.csv reproduces the
summary exactly.
"""
from __future__ import annotations

import csv
import math
import os
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .errors import ConfigError, StatisticsError, WearPromptError
from .mask import BinaryMask, load_mask, save_mask
from .metrics import AnovaResult, PixelCounts, ScoreSet, anova_oneway, score
from .poi import PoiConfig, PoiMethod, generate_prompt_points
from .prompts import (
    LOWRES_SIZE,
    PromptBundle,
    PromptSource,
    downsample_maxpool,
    points_from_prompts,
    write_prompt,
)

__all__ = [
    "EvalRecord",
    "GroupStats",
    "Failure",
    "SweepReport",
    "run_phase1",
    "run_phase2",
    "aggregate",
    "emit_report",
    "read_records_csv",
    "lowres_mask",
]

FACTORS = ("method", "train_fraction", "unet_epochs")


@dataclass(frozen=True)
class EvalRecord:
    image_id: str
    tool_id: str
    method: str
    train_fraction: int
    unet_epochs: int
    baseline_scores: ScoreSet
    refined_scores: ScoreSet

    @property
    def delta_eq1(self) -> float:
        return self.refined_scores.eq1_score - self.baseline_scores.eq1_score


@dataclass(frozen=True)
class GroupStats:
    n: int
    baseline_eq1_mean: float
    baseline_eq1_std: float
    refined_eq1_mean: float
    refined_eq1_std: float
    baseline_jaccard_mean: float
    baseline_jaccard_std: float
    refined_jaccard_mean: float
    refined_jaccard_std: float
    delta_eq1: float
    delta_jaccard: float


@dataclass(frozen=True)
class Failure:
    image_id: str
    group: str
    reason: str


@dataclass(frozen=True)
class SweepReport:
    factor: str
    records: tuple[EvalRecord, ...]
    summary: dict[Any, GroupStats]
    anova: AnovaResult | None
    anova_variable: str
    anova_note: str
    failures: tuple[Failure, ...]


class _RefineFailed(WearPromptError):
    pass


def lowres_mask(mask: BinaryMask) -> BinaryMask:
    """256x256 dense-prompt mask: max-pool for 1024x1024 inputs, plain
    nearest-neighbor resampling otherwise."""
    if mask.shape == (4 * LOWRES_SIZE, 4 * LOWRES_SIZE):
        return downsample_maxpool(mask)
    rows = (np.arange(LOWRES_SIZE) * mask.height) // LOWRES_SIZE
    cols = (np.arange(LOWRES_SIZE) * mask.width) // LOWRES_SIZE
    return BinaryMask(mask.data[np.ix_(rows, cols)])


def _mask_files(directory: Path) -> dict[str, Path]:
    files: dict[str, Path] = {}
    for path in sorted(directory.iterdir()):
        if path.suffix.lower() in (".png", ".pgm") and path.is_file():
            files.setdefault(path.stem, path)
    return files


def _run_refiner(
    refiner: str | Sequence[str],
    bundle_path: Path,
    image_path: Path,
    out_path: Path,
    coarse: BinaryMask,
) -> BinaryMask:
    if refiner == "identity":
        save_mask(coarse, out_path)
        return coarse
    argv = [*refiner, str(bundle_path), str(image_path), str(out_path)]
    try:
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=600)
    except OSError as exc:
        raise _RefineFailed(f"refiner could not start: {exc}") from None
    except subprocess.TimeoutExpired:
        raise _RefineFailed("refiner timed out") from None
    if proc.returncode != 0:
        detail = proc.stderr.strip().splitlines()
        raise _RefineFailed(
            f"refiner exited {proc.returncode}"
            + (f": {detail[-1]}" if detail else "")
        )
    try:
        return load_mask(out_path)
    except WearPromptError as exc:
        raise _RefineFailed(f"refiner output unreadable: {exc}") from None


def _process_one(
    stem: str,
    coarse_path: Path,
    truth_path: Path,
    method: PoiMethod,
    refiner: str | Sequence[str],
    out_dir: Path,
    threshold: int,
    poi_options: dict[str, Any],
    train_fraction: int,
    unet_epochs: int,
    group_label: str,
) -> tuple[EvalRecord | None, Failure | None]:
    try:
        coarse = load_mask(coarse_path, threshold=threshold)
        truth = load_mask(truth_path, threshold=threshold)
        if coarse.shape != truth.shape:
            raise _RefineFailed(
                f"coarse is {coarse.height}x{coarse.width}, "
                f"truth is {truth.height}x{truth.width}"
            )
        cfg = PoiConfig(method=method, **poi_options)
        points = generate_prompt_points(coarse, cfg)
        prompts_dir = out_dir / "prompts"
        lowres_dir = out_dir / "lowres"
        refined_dir = out_dir / "refined"
        for d in (prompts_dir, lowres_dir, refined_dir):
            d.mkdir(parents=True, exist_ok=True)
        tag = f"{stem}.{method.value}"
        lowres_path = lowres_dir / f"{tag}.png"
        save_mask(lowres_mask(coarse), lowres_path)
        bundle_path = prompts_dir / f"{tag}.json"
        bundle = PromptBundle(
            image_id=stem,
            image_path=os.path.relpath(coarse_path, prompts_dir),
            image_width=coarse.width,
            image_height=coarse.height,
            points=points_from_prompts(points),
            lowres_mask_path=os.path.relpath(lowres_path, prompts_dir),
            source=PromptSource(
                method=method.value, unet_epochs=unet_epochs, train_fraction=train_fraction
            ),
        )
        write_prompt(bundle, bundle_path)
        refined = _run_refiner(
            refiner, bundle_path, coarse_path, refined_dir / f"{tag}.png", coarse
        )
        if refined.shape != truth.shape:
            raise _RefineFailed(
                f"refined mask is {refined.height}x{refined.width}, "
                f"expected {truth.height}x{truth.width}"
            )
        record = EvalRecord(
            image_id=stem,
            tool_id="",
            method=method.value,
            train_fraction=train_fraction,
            unet_epochs=unet_epochs,
            baseline_scores=score(coarse, truth),
            refined_scores=score(refined, truth),
        )
        return record, None
    except WearPromptError as exc:
        return None, Failure(image_id=stem, group=group_label, reason=str(exc))


def _group_value(record: EvalRecord, factor: str):
    return getattr(record, factor)


def _mean_std(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return mean, std


def aggregate(
    records: Sequence[EvalRecord], factor: str
) -> tuple[dict[Any, GroupStats], AnovaResult | None, str, str]:
    """Per-group stats plus the factor ANOVA.

    Returns (summary, anova, anova_variable, note); anova is None with the
    reason in note when the test is inapplicable or degenerate.
    """
    if factor not in FACTORS:
        raise ConfigError(f"factor must be one of {FACTORS}, got {factor!r}")
    ordered = sorted(records, key=lambda r: (str(_group_value(r, factor)), r.image_id, r.tool_id))
    groups: dict[Any, list[EvalRecord]] = {}
    for r in ordered:
        groups.setdefault(_group_value(r, factor), []).append(r)
    summary: dict[Any, GroupStats] = {}
    for key in sorted(groups, key=str):
        rs = groups[key]
        b_eq1, b_eq1_sd = _mean_std([r.baseline_scores.eq1_score for r in rs])
        r_eq1, r_eq1_sd = _mean_std([r.refined_scores.eq1_score for r in rs])
        b_jac, b_jac_sd = _mean_std([r.baseline_scores.jaccard for r in rs])
        r_jac, r_jac_sd = _mean_std([r.refined_scores.jaccard for r in rs])
        summary[key] = GroupStats(
            n=len(rs),
            baseline_eq1_mean=b_eq1,
            baseline_eq1_std=b_eq1_sd,
            refined_eq1_mean=r_eq1,
            refined_eq1_std=r_eq1_sd,
            baseline_jaccard_mean=b_jac,
            baseline_jaccard_std=b_jac_sd,
            refined_jaccard_mean=r_jac,
            refined_jaccard_std=r_jac_sd,
            delta_eq1=r_eq1 - b_eq1,
            delta_jaccard=r_jac - b_jac,
        )
    variable = "refined_eq1" if factor == "method" else "delta_eq1"
    if variable == "refined_eq1":
        samples = {k: [r.refined_scores.eq1_score for r in v] for k, v in groups.items()}
    else:
        samples = {k: [r.delta_eq1 for r in v] for k, v in groups.items()}
    if len(samples) < 2:
        return summary, None, variable, f"anova skipped: {len(samples)} group(s)"
    if min(len(v) for v in samples.values()) < 2:
        return summary, None, variable, "anova skipped: a group has fewer than 2 records"
    try:
        anova = anova_oneway([samples[k] for k in sorted(samples, key=str)])
    except StatisticsError as exc:
        return summary, None, variable, f"anova degenerate: {exc}"
    return summary, anova, variable, ""


def _sweep(
    tasks: list[tuple],
    workers: int,
) -> tuple[list[EvalRecord], list[Failure]]:
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda t: _process_one(*t), tasks))
    else:
        results = [_process_one(*t) for t in tasks]
    records = [r for r, _ in results if r is not None]
    failures = [f for _, f in results if f is not None]
    failures.sort(key=lambda f: (f.group, f.image_id))
    return records, failures


def _match_stems(
    coarse_dir: Path, truth_dir: Path, group_label: str
) -> tuple[list[tuple[str, Path, Path]], list[Failure]]:
    if not coarse_dir.is_dir():
        raise ConfigError(f"coarse directory not found: {coarse_dir}")
    if not truth_dir.is_dir():
        raise ConfigError(f"truth directory not found: {truth_dir}")
    coarse = _mask_files(coarse_dir)
    truth = _mask_files(truth_dir)
    if not coarse:
        raise ConfigError(f"no mask files in {coarse_dir}")
    pairs = []
    failures = []
    for stem, path in coarse.items():
        if stem in truth:
            pairs.append((stem, path, truth[stem]))
        else:
            failures.append(
                Failure(image_id=stem, group=group_label, reason="no matching truth mask")
            )
    return pairs, failures


def run_phase1(
    coarse_dir: str | Path,
    truth_dir: str | Path,
    methods: Sequence[PoiMethod],
    refiner: str | Sequence[str],
    out_dir: str | Path,
    threshold: int = 128,
    poi_options: dict[str, Any] | None = None,
    workers: int = 1,
    train_fraction: int = 100,
    unet_epochs: int = 100,
) -> SweepReport:
    """Sweep the point methods over one coarse directory; ANOVA across
    methods on refined eq1 scores."""
    if not methods:
        raise ConfigError("at least one method is required")
    out_dir = Path(out_dir)
    options = poi_options or {}
    pairs, failures = _match_stems(Path(coarse_dir), Path(truth_dir), "phase1")
    tasks = [
        (
            stem,
            cpath,
            tpath,
            method,
            refiner,
            out_dir / method.value,
            threshold,
            options,
            train_fraction,
            unet_epochs,
            method.value,
        )
        for method in methods
        for stem, cpath, tpath in pairs
    ]
    records, task_failures = _sweep(tasks, workers)
    summary, anova, variable, note = aggregate(records, "method")
    all_failures = tuple(sorted(failures + task_failures, key=lambda f: (f.group, f.image_id)))
    return SweepReport(
        factor="method",
        records=tuple(
            sorted(records, key=lambda r: (r.method, r.image_id, r.tool_id))
        ),
        summary=summary,
        anova=anova,
        anova_variable=variable,
        anova_note=note,
        failures=all_failures,
    )


def run_phase2(
    runs: Sequence[tuple[int, str | Path]],
    truth_dir: str | Path,
    method: PoiMethod,
    refiner: str | Sequence[str],
    out_dir: str | Path,
    factor: str = "train_fraction",
    threshold: int = 128,
    poi_options: dict[str, Any] | None = None,
    workers: int = 1,
) -> SweepReport:
    """Sweep train_fraction or unet_epochs, one coarse directory per value;
    ANOVA across the factor on per-image eq1 deltas."""
    if factor not in ("train_fraction", "unet_epochs"):
        raise ConfigError(
            f"factor must be train_fraction or unet_epochs, got {factor!r}"
        )
    if not runs:
        raise ConfigError("at least one run is required")
    values = [v for v, _ in runs]
    if len(set(values)) != len(values):
        raise ConfigError(f"duplicate factor values in runs: {values}")
    out_dir = Path(out_dir)
    options = poi_options or {}
    tasks = []
    failures: list[Failure] = []
    for value, coarse_dir in runs:
        if not isinstance(value, int) or value < 0:
            raise ConfigError(f"factor value must be a nonnegative integer, got {value!r}")
        group_label = f"{factor}={value}"
        pairs, miss = _match_stems(Path(coarse_dir), Path(truth_dir), group_label)
        failures.extend(miss)
        train_fraction = value if factor == "train_fraction" else 100
        unet_epochs = value if factor == "unet_epochs" else 100
        tasks.extend(
            (
                stem,
                cpath,
                tpath,
                method,
                refiner,
                out_dir / f"{factor}_{value}",
                threshold,
                options,
                train_fraction,
                unet_epochs,
                group_label,
            )
            for stem, cpath, tpath in pairs
        )
    records, task_failures = _sweep(tasks, workers)
    summary, anova, variable, note = aggregate(records, factor)
    all_failures = tuple(sorted(failures + task_failures, key=lambda f: (f.group, f.image_id)))
    return SweepReport(
        factor=factor,
        records=tuple(
            sorted(records, key=lambda r: (_group_value(r, factor), r.image_id, r.tool_id))
        ),
        summary=summary,
        anova=anova,
        anova_variable=variable,
        anova_note=note,
        failures=all_failures,
    )


_RECORD_COLUMNS = (
    "image_id",
    "tool_id",
    "method",
    "train_fraction",
    "unet_epochs",
    "baseline_eq1",
    "baseline_jaccard",
    "baseline_intersection",
    "baseline_pred_only",
    "baseline_truth_only",
    "baseline_background",
    "refined_eq1",
    "refined_jaccard",
    "refined_intersection",
    "refined_pred_only",
    "refined_truth_only",
    "refined_background",
    "delta_eq1",
)

_SUMMARY_COLUMNS = (
    "factor",
    "group",
    "n",
    "baseline_eq1_mean",
    "baseline_eq1_std",
    "refined_eq1_mean",
    "refined_eq1_std",
    "baseline_jaccard_mean",
    "baseline_jaccard_std",
    "refined_jaccard_mean",
    "refined_jaccard_std",
    "delta_eq1",
    "delta_jaccard",
)

_ANOVA_COLUMNS = (
    "factor",
    "variable",
    "f_statistic",
    "p_value",
    "df_between",
    "df_within",
    "note",
)

_FAILURE_COLUMNS = ("image_id", "group", "reason")


def _score_row(s: ScoreSet) -> list:
    c = s.pixel_counts
    return [s.eq1_score, s.jaccard, c.intersection, c.pred_only, c.truth_only, c.background]


def emit_report(report: SweepReport, out_dir: str | Path) -> None:
    """Write records.csv, summary.csv, anova.csv, failures.csv and, when
    there are records, plotdata/*.tsv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "records.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(_RECORD_COLUMNS)
        for r in report.records:
            w.writerow(
                [r.image_id, r.tool_id, r.method, r.train_fraction, r.unet_epochs]
                + _score_row(r.baseline_scores)
                + _score_row(r.refined_scores)
                + [r.delta_eq1]
            )
    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(_SUMMARY_COLUMNS)
        for key, g in report.summary.items():
            w.writerow(
                [
                    report.factor,
                    key,
                    g.n,
                    g.baseline_eq1_mean,
                    g.baseline_eq1_std,
                    g.refined_eq1_mean,
                    g.refined_eq1_std,
                    g.baseline_jaccard_mean,
                    g.baseline_jaccard_std,
                    g.refined_jaccard_mean,
                    g.refined_jaccard_std,
                    g.delta_eq1,
                    g.delta_jaccard,
                ]
            )
    with open(out / "anova.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(_ANOVA_COLUMNS)
        if report.anova is not None:
            a = report.anova
            w.writerow(
                [report.factor, report.anova_variable, a.f_statistic, a.p_value,
                 a.df_between, a.df_within, report.anova_note]
            )
        elif report.anova_note:
            w.writerow([report.factor, report.anova_variable, "", "", "", "", report.anova_note])
    with open(out / "failures.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(_FAILURE_COLUMNS)
        for f in report.failures:
            w.writerow([f.image_id, f.group, f.reason])
    if report.records:
        plotdir = out / "plotdata"
        plotdir.mkdir(exist_ok=True)
        _write_tsv(
            plotdir / "refined_eq1_mean.tsv",
            report.factor,
            "refined_eq1_mean",
            [(k, g.refined_eq1_mean) for k, g in report.summary.items()],
        )
        _write_tsv(
            plotdir / "delta_eq1.tsv",
            report.factor,
            "delta_eq1",
            [(k, g.delta_eq1) for k, g in report.summary.items()],
        )


def _write_tsv(path: Path, x_name: str, y_name: str, rows: list[tuple]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{x_name}\t{y_name}\n")
        for x, y in rows:
            fh.write(f"{x}\t{y}\n")


def read_records_csv(path: str | Path) -> tuple[EvalRecord, ...]:
    """Re-ingest a records.csv; aggregate() on the result reproduces the
    emitted summary exactly."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows or tuple(rows[0]) != _RECORD_COLUMNS:
        raise ConfigError(f"{path}: not a records.csv (unexpected header)")
    records = []
    for row in rows[1:]:
        if not row:
            continue
        vals = dict(zip(_RECORD_COLUMNS, row))
        records.append(
            EvalRecord(
                image_id=vals["image_id"],
                tool_id=vals["tool_id"],
                method=vals["method"],
                train_fraction=int(vals["train_fraction"]),
                unet_epochs=int(vals["unet_epochs"]),
                baseline_scores=ScoreSet(
                    eq1_score=float(vals["baseline_eq1"]),
                    jaccard=float(vals["baseline_jaccard"]),
                    pixel_counts=PixelCounts(
                        intersection=int(vals["baseline_intersection"]),
                        pred_only=int(vals["baseline_pred_only"]),
                        truth_only=int(vals["baseline_truth_only"]),
                        background=int(vals["baseline_background"]),
                    ),
                ),
                refined_scores=ScoreSet(
                    eq1_score=float(vals["refined_eq1"]),
                    jaccard=float(vals["refined_jaccard"]),
                    pixel_counts=PixelCounts(
                        intersection=int(vals["refined_intersection"]),
                        pred_only=int(vals["refined_pred_only"]),
                        truth_only=int(vals["refined_truth_only"]),
                        background=int(vals["refined_background"]),
                    ),
                ),
            )
        )
    return tuple(records)
