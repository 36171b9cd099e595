"""Acceptance suite: one test per release criterion, each ending in a PASS line.

Run with `pytest -v tests/test_acceptance.py` to get one pass/fail line per
criterion; the prints summarize the measured numbers.
"""
from __future__ import annotations

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

import oracles
from conftest import disk, ellipse, random_blobs, record_acceptance
from wearprompt import (
    BinaryMask,
    PoiConfig,
    PoiMethod,
    StructuringElement,
    composite_loss,
    downsample_maxpool,
    erode,
    generate_prompt_points,
    GrayMask,
    anova_oneway,
    poi_coga,
    poi_ms,
    poi_rcoga,
    run_phase1,
    save_mask,
    score,
    stratified_split,
    subset,
)
from wearprompt.dataset import DatasetManifest, ManifestEntry
from wearprompt.cli import main as cli_main


def report(line: str) -> None:
    record_acceptance(f"ACCEPTANCE {line}")


def test_a1_poi_invariants_500_masks():
    rng = np.random.default_rng(2024)
    start = time.monotonic()
    masks = 0
    checks = 0
    for _ in range(500):
        h = int(rng.integers(32, 257))
        w = int(rng.integers(32, 257))
        arr = random_blobs(rng, h, w)
        m = BinaryMask(arr)
        masks += 1
        for method in PoiMethod:
            out = generate_prompt_points(m, PoiConfig(method=method))
            assert out.positives, f"{method}: no positives on a nonempty mask"
            for p in out.positives:
                assert 0 <= p.row < h and 0 <= p.col < w, f"{method}: positive {p} out of bounds"
                assert arr[p.row, p.col], f"{method}: positive {p} on background"
                checks += 1
            for n in out.negatives:
                assert 0 <= n.row < h and 0 <= n.col < w, f"{method}: negative {n} out of bounds"
                assert not arr[n.row, n.col], f"{method}: negative {n} on foreground"
                checks += 1
    elapsed = time.monotonic() - start
    assert elapsed < 60.0, f"invariant sweep took {elapsed:.1f}s (budget 60s)"
    report(
        f"poi-invariants: PASS ({masks} masks x 3 methods, {checks} point checks, "
        f"0 violations, {elapsed:.1f}s)"
    )


def test_a2_oracle_equivalence_fixture_set(shape_zoo):
    assert len(shape_zoo) >= 30
    compared = 0
    for arr in shape_zoo:
        m = BinaryMask(arr)
        got_ms = [(p.row, p.col) for p in poi_ms(m, PoiConfig(method=PoiMethod.MS))]
        assert got_ms == oracles.ms_points(arr)
        got_ms_cross = [
            (p.row, p.col)
            for p in poi_ms(
                m, PoiConfig(method=PoiMethod.MS, se_shape=StructuringElement.CROSS3)
            )
        ]
        assert got_ms_cross == oracles.ms_points(arr, se="cross3")
        got_coga = [(p.row, p.col) for p in poi_coga(m, PoiConfig(method=PoiMethod.COGA))]
        assert got_coga == oracles.coga_points(arr)
        got_rcoga = [(p.row, p.col) for p in poi_rcoga(m, PoiConfig(method=PoiMethod.RCOGA))]
        assert got_rcoga == oracles.rcoga_points(arr)
        compared += 4
    report(
        f"oracle-equivalence: PASS ({len(shape_zoo)} fixture masks, "
        f"{compared} method runs, exact match)"
    )


def test_a3_metric_identities():
    rng = np.random.default_rng(2025)
    worst = 0.0
    for _ in range(500):
        h = int(rng.integers(8, 48))
        w = int(rng.integers(8, 48))
        a = BinaryMask(random_blobs(rng, h, w))
        b = BinaryMask(random_blobs(rng, h, w))
        s = score(a, b)
        gap = abs(s.eq1_score - 2 * s.jaccard / (1 + s.jaccard))
        worst = max(worst, gap)
        assert gap <= 1e-12
        assert score(a, a).eq1_score == 1.0
    left = np.zeros((16, 32), dtype=bool)
    right = np.zeros((16, 32), dtype=bool)
    left[4:12, 2:14] = True
    right[4:12, 18:30] = True
    s = score(BinaryMask(left), BinaryMask(right))
    assert s.eq1_score == 0.0 and s.jaccard == 0.0
    for _ in range(50):
        h = int(rng.integers(4, 24))
        w = int(rng.integers(4, 24))
        probs = GrayMask(rng.random((h, w)))
        truth = BinaryMask(rng.random((h, w)) < 0.5)
        lb = composite_loss(probs, truth)
        assert lb.total == lb.bce + lb.overlap
    report(
        f"metric-identities: PASS (500 pairs, max |eq1 - 2J/(1+J)| = {worst:.2e}, "
        "self = 1, disjoint = 0, loss total exact)"
    )


def test_a4_anova_against_reference():
    rng = np.random.default_rng(2026)
    worst_f = worst_p = 0.0
    for _ in range(20):
        k = int(rng.integers(2, 7))
        groups = [
            rng.normal(rng.uniform(-3, 3), rng.uniform(0.2, 4.0), int(rng.integers(2, 40))).tolist()
            for _ in range(k)
        ]
        mine = anova_oneway(groups)
        ref = stats.f_oneway(*groups)
        fgap = abs(mine.f_statistic - float(ref.statistic)) / max(1.0, abs(float(ref.statistic)))
        pgap = abs(mine.p_value - float(ref.pvalue)) / max(1e-30, float(ref.pvalue))
        worst_f = max(worst_f, fgap)
        worst_p = max(worst_p, pgap)
        assert fgap <= 1e-6 and pgap <= 1e-6
    same = [[0.4, 0.6, 0.5, 0.7], [0.4, 0.6, 0.5, 0.7], [0.4, 0.6, 0.5, 0.7]]
    res = anova_oneway(same)
    assert res.f_statistic == 0.0
    assert res.p_value == 1.0
    report(
        f"anova-reference: PASS (20 configs, max rel gap F = {worst_f:.2e}, "
        f"p = {worst_p:.2e}; identical groups p = 1.0)"
    )


def test_a5_morphology_properties():
    rng = np.random.default_rng(2027)
    for i in range(500):
        h = int(rng.integers(6, 40))
        w = int(rng.integers(6, 40))
        arr = rng.random((h, w)) < rng.uniform(0.2, 0.8)
        m = BinaryMask(arr)
        se = StructuringElement.SQUARE3 if i % 2 == 0 else StructuringElement.CROSS3
        eroded = erode(m, se)
        assert not (eroded.data & ~arr).any(), "erosion must be anti-extensive"
        bigger = BinaryMask(arr | (rng.random((h, w)) < 0.1))
        assert not (eroded.data & ~erode(bigger, se).data).any(), "erosion must be monotone"
    square = np.zeros((7, 7), dtype=bool)
    square[1:6, 1:6] = True
    once = erode(BinaryMask(square))
    twice = erode(once)
    assert once.foreground_count() == 9
    assert [(p.row, p.col) for p in twice.foreground_points()] == [(3, 3)]
    assert erode(twice).foreground_count() == 0
    report("morphology: PASS (500 masks anti-extensive + monotone, 5x5 -> {(2,2)-center} in 2)")


def test_a6_downsampling_window_or():
    rng = np.random.default_rng(2028)
    for i in range(100):
        density = float(rng.uniform(0.0005, 0.9))
        arr = rng.random((1024, 1024)) < density
        got = downsample_maxpool(BinaryMask(arr)).data
        assert np.array_equal(got, oracles.maxpool_reduceat(arr)), f"mask {i} mismatch"
    report("downsampling: PASS (100 random 1024x1024 masks, every window OR exact)")


@pytest.fixture(scope="module")
def e2e_corpus(tmp_path_factory):
    """Six 1024x1024 truths; coarse = truth eroded 1-3 times plus 1% salt."""
    root = tmp_path_factory.mktemp("e2e")
    (root / "truth").mkdir()
    (root / "coarse").mkdir()
    rng = np.random.default_rng(2029)
    for i in range(6):
        if i % 2 == 0:
            truth = disk(1024, 1024, 400.0 + 40 * i, 480.0, 70.0 + 12 * i)
        else:
            truth = ellipse(1024, 1024, 520.0, 420.0 + 30 * i, 110.0, 60.0 + 8 * i)
        tm = BinaryMask(truth)
        coarse = tm
        for _ in range(1 + i % 3):
            coarse = erode(coarse)
        salted = coarse.data | (rng.random((1024, 1024)) < 0.01)
        save_mask(tm, root / "truth" / f"wear_{i:02d}.png")
        save_mask(BinaryMask(salted), root / "coarse" / f"wear_{i:02d}.png")
    script = root / "copy_truth.py"
    script.write_text(
        "import json, shutil, sys\n"
        "with open(sys.argv[1], encoding='utf-8') as fh:\n"
        "    bundle = json.load(fh)\n"
        f"truth_dir = {str(root / 'truth')!r}\n"
        "shutil.copy(truth_dir + '/' + bundle['image_id'] + '.png', sys.argv[3])\n",
        encoding="utf-8",
    )
    return root


def test_a7_end_to_end_synthetic_sweep(e2e_corpus, tmp_path):
    start = time.monotonic()
    methods = list(PoiMethod)
    oracle_report = run_phase1(
        e2e_corpus / "coarse",
        e2e_corpus / "truth",
        methods,
        [sys.executable, str(e2e_corpus / "copy_truth.py")],
        tmp_path / "oracle_run",
    )
    assert not oracle_report.failures, oracle_report.failures
    assert len(oracle_report.records) == 18
    for r in oracle_report.records:
        assert r.refined_scores.eq1_score == 1.0, f"{r.image_id}/{r.method} not perfect"
    baseline_mean = float(
        np.mean([r.baseline_scores.eq1_score for r in oracle_report.records])
    )
    assert baseline_mean < 0.95, f"baseline mean eq1 {baseline_mean:.4f} not below 0.95"
    identity_report = run_phase1(
        e2e_corpus / "coarse",
        e2e_corpus / "truth",
        methods,
        "identity",
        tmp_path / "identity_run",
    )
    assert not identity_report.failures
    for r in identity_report.records:
        assert r.delta_eq1 == 0.0
    elapsed = time.monotonic() - start
    assert elapsed < 300.0, f"end-to-end sweep took {elapsed:.1f}s (budget 300s)"
    report(
        f"end-to-end: PASS (18 oracle-refined records all eq1 = 1.0, baseline mean "
        f"{baseline_mean:.3f} < 0.95, identity deltas all 0, {elapsed:.1f}s)"
    )


def test_a8_seeded_subcommands_byte_identical(tmp_path, capsys):
    from PIL import Image

    rng = np.random.default_rng(2030)
    mask_path = tmp_path / "m.png"
    save_mask(BinaryMask(random_blobs(rng, 48, 48)), mask_path)
    img_path = tmp_path / "img.png"
    Image.fromarray(rng.integers(0, 256, (48, 48, 3), dtype=np.uint8), "RGB").save(img_path)
    (tmp_path / "labels").mkdir()
    rows = ["image_path,label_path,tool_id"]
    for i in range(20):
        arr = np.zeros(12 * 12, dtype=bool)
        arr[: i + 1] = True
        save_mask(BinaryMask(arr.reshape(12, 12)), tmp_path / "labels" / f"l{i:02d}.png")
        rows.append(f"i{i:02d}.png,labels/l{i:02d}.png,t1")
    manifest = tmp_path / "manifest.csv"
    manifest.write_text("\n".join(rows) + "\n", encoding="utf-8")

    commands = {
        "poi": ["poi", "--mask", str(mask_path), "--method", "rcoga",
                "--out", str(tmp_path / "pts.json")],
        "prompt": ["prompt", "--mask", str(mask_path), "--method", "coga",
                   "--out", str(tmp_path / "bundle.json")],
        "split": ["split", "--manifest", str(manifest), "--seed", "5",
                  "--out-train", str(tmp_path / "train.csv"),
                  "--out-test", str(tmp_path / "test.csv")],
        "subset": ["subset", "--manifest", str(manifest), "--fraction", "40", "--seed", "9",
                   "--out", str(tmp_path / "subset.csv")],
        "augment": ["augment", "--image", str(img_path), "--mask", str(mask_path),
                    "--seed", "4", "--draw-seed", "13",
                    "--out-image", str(tmp_path / "aug.png"),
                    "--out-mask", str(tmp_path / "aug_mask.png")],
    }
    outputs = {
        "poi": ["pts.json"],
        "prompt": ["bundle.json", "bundle.lowres.png"],
        "split": ["train.csv", "test.csv"],
        "subset": ["subset.csv"],
        "augment": ["aug.png", "aug_mask.png"],
    }
    for name, argv in commands.items():
        assert cli_main(argv) == 0, f"{name} failed"
        capsys.readouterr()
        first = {f: (tmp_path / f).read_bytes() for f in outputs[name]}
        assert cli_main(argv) == 0, f"{name} rerun failed"
        capsys.readouterr()
        again = {f: (tmp_path / f).read_bytes() for f in outputs[name]}
        assert first == again, f"{name} rerun changed output bytes"
    report(f"determinism: PASS ({len(commands)} seeded subcommands, reruns byte-identical)")


def test_a9_split_subset_bookkeeping(tmp_path):
    (tmp_path / "labels").mkdir()
    entries = []
    for i in range(66):
        arr = np.zeros(15 * 15, dtype=bool)
        arr[: i + 1] = True
        save_mask(BinaryMask(arr.reshape(15, 15)), tmp_path / "labels" / f"m{i:03d}.png")
        entries.append(ManifestEntry(f"i{i:03d}.png", f"labels/m{i:03d}.png", "tool_a"))
    manifest = DatasetManifest(entries=tuple(entries))
    train, test = stratified_split(manifest, test_fraction=0.2, bins=5, seed=1,
                                   base_dir=tmp_path)
    assert len(train) + len(test) == 66
    assert abs(len(test) - 12) <= 1
    assert abs(len(train) - 54) <= 1
    big = DatasetManifest(
        entries=tuple(ManifestEntry(f"i{i}.png", f"l{i}.png", "t") for i in range(177))
    )
    picked = subset(big, 20, seed=0)
    assert len(picked) == math.floor(0.2 * 177) == 35
    report(
        f"split-subset: PASS (66 -> {len(train)}/{len(test)} within ±1 of 54/12; "
        f"20% of 177 = {len(picked)})"
    )
