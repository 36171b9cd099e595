"""Command-line interface: one subcommand per library operation.

Exit codes: 0 success, 1 processing error, 2 usage error.  Errors go to
stderr as single-line JSON; stdout carries data only.  Defaults can be
overridden by an INI config file (section [defaults], keys named like the
long flags with underscores) given via --config or the WEARPROMPT_CONFIG
environment variable; explicit flags always win over the config file.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import os
import shlex
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from . import dataset as ds
from . import harness, metrics, poi, prompts
from .errors import ConfigError, WearPromptError
from .mask import (
    BinaryMask,
    Connectivity,
    StructuringElement,
    load_gray,
    load_mask,
    save_mask,
)

CONFIG_ENV_VAR = "WEARPROMPT_CONFIG"


def _config_connectivity(raw: str) -> int:
    value = int(raw)
    if value not in (4, 8):
        raise ValueError(raw)
    return value


def _config_se(raw: str) -> str:
    if raw not in ("cross3", "square3"):
        raise ValueError(raw)
    return raw


_CONFIG_CONVERTERS = {
    "threshold": int,
    "neg_distance": int,
    "max_depth": int,
    "min_segment_area": int,
    "connectivity": _config_connectivity,
    "se": _config_se,
    "seed": int,
    "draw_seed": int,
    "workers": int,
    "test_fraction": float,
    "bins": int,
    "epsilon": float,
    "fraction": int,
    "train_fraction": int,
    "unet_epochs": int,
    "hflip_prob": float,
    "vflip_prob": float,
    "rotate_max": float,
    "translate_max": float,
}


class _JsonErrorParser(argparse.ArgumentParser):
    """argparse parser that reports usage errors as single-line JSON."""

    def error(self, message: str) -> None:  # noqa: D102 - argparse override
        print(json.dumps({"error": "usage", "message": message}), file=sys.stderr)
        raise SystemExit(2)


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj) + "\n")


def _parse_runs(text: str) -> list[tuple[int, str]]:
    runs = []
    for part in text.split(","):
        value, sep, directory = part.partition("=")
        if not sep or not directory:
            raise argparse.ArgumentTypeError(
                f"run {part!r} must look like VALUE=DIR (e.g. 20=masks/f20)"
            )
        try:
            runs.append((int(value), directory))
        except ValueError:
            raise argparse.ArgumentTypeError(f"run value {value!r} is not an integer") from None
    return runs


def _parse_methods(text: str) -> list[poi.PoiMethod]:
    methods = []
    for name in text.split(","):
        try:
            methods.append(poi.PoiMethod(name.strip().lower()))
        except ValueError:
            raise argparse.ArgumentTypeError(f"unknown method {name!r}") from None
    return methods


def _add_poi_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--se", choices=["cross3", "square3"], default="square3",
                    help="structuring element for the ms method")
    sp.add_argument("--max-depth", type=int, default=3, help="rcoga recursion cap")
    sp.add_argument("--min-segment-area", type=int, default=8,
                    help="rcoga minimum segment size in pixels")
    sp.add_argument("--neg-distance", type=int, default=10,
                    help="extrapolation distance for negative points")
    sp.add_argument("--connectivity", type=int, choices=[4, 8], default=8)
    sp.add_argument("--ms-all-pixels", action="store_true",
                    help="emit every pixel of the ms center line, not one point")


def _poi_options(args: argparse.Namespace) -> dict:
    return {
        "se_shape": StructuringElement(args.se),
        "max_depth": args.max_depth,
        "min_segment_area": args.min_segment_area,
        "neg_distance": args.neg_distance,
        "connectivity": Connectivity(args.connectivity),
        "ms_all_pixels": args.ms_all_pixels,
    }


def _points_json(pts) -> list[dict]:
    return [{"x": p.col, "y": p.row} for p in pts]


def _cmd_binarize(args) -> None:
    mask = load_mask(args.mask, threshold=args.threshold)
    save_mask(mask, args.out)
    _emit({"out": args.out, "foreground": mask.foreground_count()})


def _cmd_poi(args) -> None:
    mask = load_mask(args.mask, threshold=args.threshold)
    cfg = poi.PoiConfig(method=args.method, **_poi_options(args))
    points = poi.generate_prompt_points(mask, cfg)
    doc = {
        "method": args.method.value,
        "positives": _points_json(points.positives),
        "negatives": _points_json(points.negatives),
    }
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_prompt(args) -> None:
    mask = load_mask(args.mask, threshold=args.threshold)
    cfg = poi.PoiConfig(method=args.method, **_poi_options(args))
    points = poi.generate_prompt_points(mask, cfg)
    out_path = Path(args.out)
    out_dir = out_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    lowres_path = Path(args.lowres_out) if args.lowres_out else out_path.with_suffix(".lowres.png")
    save_mask(harness.lowres_mask(mask), lowres_path)
    image_path = args.image if args.image else args.mask
    image_id = args.image_id if args.image_id else Path(args.mask).stem
    bundle = prompts.PromptBundle(
        image_id=image_id,
        image_path=os.path.relpath(image_path, out_dir),
        image_width=mask.width,
        image_height=mask.height,
        points=prompts.points_from_prompts(points),
        lowres_mask_path=os.path.relpath(lowres_path, out_dir),
        source=prompts.PromptSource(
            method=args.method.value,
            unet_epochs=args.unet_epochs,
            train_fraction=args.train_fraction,
        ),
    )
    prompts.write_prompt(bundle, out_path)
    _emit({"out": str(out_path), "points": len(bundle.points)})


def _cmd_score(args) -> None:
    pred = load_mask(args.pred, threshold=args.threshold)
    truth = load_mask(args.truth, threshold=args.threshold)
    s = metrics.score(pred, truth)
    c = s.pixel_counts
    _emit(
        {
            "eq1": s.eq1_score,
            "jaccard": s.jaccard,
            "pixel_counts": {
                "intersection": c.intersection,
                "pred_only": c.pred_only,
                "truth_only": c.truth_only,
                "background": c.background,
            },
        }
    )


def _cmd_overlay(args) -> None:
    pred = load_mask(args.pred, threshold=args.threshold)
    truth = load_mask(args.truth, threshold=args.threshold)
    metrics.save_overlay(pred, truth, args.out)
    grid = metrics.overlay(pred, truth)
    _emit(
        {
            "out": args.out,
            "correct": int((grid == metrics.OverlayCategory.CORRECT).sum()),
            "pred_only": int((grid == metrics.OverlayCategory.PRED_ONLY).sum()),
            "missed": int((grid == metrics.OverlayCategory.MISSED).sum()),
            "background": int((grid == metrics.OverlayCategory.BACKGROUND).sum()),
        }
    )


def _cmd_loss(args) -> None:
    pred = load_gray(args.pred)
    truth = load_mask(args.truth, threshold=args.threshold)
    breakdown = metrics.composite_loss(pred, truth, epsilon=args.epsilon)
    _emit({"bce": breakdown.bce, "overlap": breakdown.overlap, "total": breakdown.total})


def _cmd_split(args) -> None:
    manifest = ds.read_manifest(args.manifest)
    base_dir = args.base_dir if args.base_dir else Path(args.manifest).parent
    train, test = ds.stratified_split(
        manifest,
        test_fraction=args.test_fraction,
        bins=args.bins,
        seed=args.seed,
        base_dir=base_dir,
    )
    ds.write_manifest(train, args.out_train)
    ds.write_manifest(test, args.out_test)
    _emit({"train": len(train), "test": len(test)})


def _cmd_subset(args) -> None:
    manifest = ds.read_manifest(args.manifest)
    picked = ds.subset(manifest, fraction=args.fraction, seed=args.seed)
    ds.write_manifest(picked, args.out)
    _emit({"selected": len(picked)})


def _cmd_augment(args) -> None:
    with Image.open(args.image) as img:
        image = np.asarray(img.convert("RGB") if img.mode not in ("L", "RGB") else img)
    mask = load_mask(args.mask, threshold=args.threshold)
    spec = ds.AugmentSpec(
        hflip_prob=args.hflip_prob,
        vflip_prob=args.vflip_prob,
        rotate_deg=(-args.rotate_max, args.rotate_max),
        translate_frac=(-args.translate_max, args.translate_max),
        seed=args.seed,
    )
    out_image, out_mask = ds.augment_pair(image, mask, spec, args.draw_seed)
    Image.fromarray(out_image).save(args.out_image, format="PNG")
    save_mask(out_mask, args.out_mask)
    _emit({"out_image": args.out_image, "out_mask": args.out_mask})


def _refiner_spec(text: str):
    if text == "identity":
        return "identity"
    argv = shlex.split(text)
    if not argv:
        raise ConfigError("refiner command is empty")
    return argv


def _cmd_eval_phase1(args) -> None:
    report = harness.run_phase1(
        coarse_dir=args.coarse_dir,
        truth_dir=args.truth_dir,
        methods=args.methods,
        refiner=_refiner_spec(args.refiner),
        out_dir=args.out_dir,
        threshold=args.threshold,
        poi_options=_poi_options(args),
        workers=args.workers,
        train_fraction=args.train_fraction,
        unet_epochs=args.unet_epochs,
    )
    report_dir = Path(args.out_dir) / "report"
    harness.emit_report(report, report_dir)
    _emit(
        {
            "records": len(report.records),
            "failures": len(report.failures),
            "report_dir": str(report_dir),
        }
    )


def _cmd_eval_phase2(args) -> None:
    report = harness.run_phase2(
        runs=args.runs,
        truth_dir=args.truth_dir,
        method=args.method,
        refiner=_refiner_spec(args.refiner),
        out_dir=args.out_dir,
        factor=args.factor,
        threshold=args.threshold,
        poi_options=_poi_options(args),
        workers=args.workers,
    )
    report_dir = Path(args.out_dir) / "report"
    harness.emit_report(report, report_dir)
    _emit(
        {
            "records": len(report.records),
            "failures": len(report.failures),
            "report_dir": str(report_dir),
        }
    )


def _cmd_anova(args) -> None:
    with open(args.data, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != ("group", "value"):
        raise ConfigError(f"{args.data}: expected CSV header group,value")
    groups: dict[str, list[float]] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise ConfigError(f"{args.data} line {lineno}: expected 2 fields")
        try:
            groups.setdefault(row[0], []).append(float(row[1]))
        except ValueError:
            raise ConfigError(f"{args.data} line {lineno}: {row[1]!r} is not a number") from None
    result = metrics.anova_oneway([groups[k] for k in sorted(groups)])
    _emit(
        {
            "f_statistic": result.f_statistic,
            "p_value": result.p_value,
            "df_between": result.df_between,
            "df_within": result.df_within,
        }
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _JsonErrorParser(
        prog="wearprompt",
        description="Point-prompt generation and evaluation for wear-mask refinement.",
    )
    parser.add_argument("--config", default=None,
                        help=f"INI config file (default: ${CONFIG_ENV_VAR})")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("binarize", help="threshold a grayscale mask file")
    sp.add_argument("--mask", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--threshold", type=int, default=128)
    sp.set_defaults(func=_cmd_binarize)

    sp = sub.add_parser("poi", help="generate positive/negative prompt points")
    sp.add_argument("--mask", required=True)
    sp.add_argument("--method", type=poi.PoiMethod, choices=list(poi.PoiMethod), required=True,
                    metavar="{ms,coga,rcoga}")
    sp.add_argument("--out", default=None, help="output JSON path (default: stdout)")
    sp.add_argument("--threshold", type=int, default=128)
    _add_poi_flags(sp)
    sp.set_defaults(func=_cmd_poi)

    sp = sub.add_parser("prompt", help="write a refiner prompt bundle")
    sp.add_argument("--mask", required=True, help="coarse mask file")
    sp.add_argument("--method", type=poi.PoiMethod, choices=list(poi.PoiMethod), required=True,
                    metavar="{ms,coga,rcoga}")
    sp.add_argument("--out", required=True, help="bundle JSON path")
    sp.add_argument("--image", default=None, help="image path stored in the bundle")
    sp.add_argument("--image-id", default=None)
    sp.add_argument("--lowres-out", default=None)
    sp.add_argument("--threshold", type=int, default=128)
    sp.add_argument("--unet-epochs", type=int, default=100)
    sp.add_argument("--train-fraction", type=int, default=100)
    _add_poi_flags(sp)
    sp.set_defaults(func=_cmd_prompt)

    sp = sub.add_parser("score", help="score a predicted mask against truth")
    sp.add_argument("--pred", required=True)
    sp.add_argument("--truth", required=True)
    sp.add_argument("--threshold", type=int, default=128)
    sp.set_defaults(func=_cmd_score)

    sp = sub.add_parser("overlay", help="write an RGB agreement overlay")
    sp.add_argument("--pred", required=True)
    sp.add_argument("--truth", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--threshold", type=int, default=128)
    sp.set_defaults(func=_cmd_overlay)

    sp = sub.add_parser("loss", help="composite BCE + overlap loss")
    sp.add_argument("--pred", required=True, help="grayscale probability raster")
    sp.add_argument("--truth", required=True)
    sp.add_argument("--epsilon", type=float, default=1e-7)
    sp.add_argument("--threshold", type=int, default=128)
    sp.set_defaults(func=_cmd_loss)

    sp = sub.add_parser("split", help="area-stratified train/test split")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--out-train", required=True)
    sp.add_argument("--out-test", required=True)
    sp.add_argument("--test-fraction", type=float, default=0.20)
    sp.add_argument("--bins", type=int, default=5)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--base-dir", default=None,
                    help="root for label paths (default: manifest directory)")
    sp.set_defaults(func=_cmd_split)

    sp = sub.add_parser("subset", help="per-tool fractional subsample")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--fraction", type=int, choices=list(ds.SUBSET_FRACTIONS), required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=_cmd_subset)

    sp = sub.add_parser("augment", help="seeded paired image/mask augmentation")
    sp.add_argument("--image", required=True)
    sp.add_argument("--mask", required=True)
    sp.add_argument("--out-image", required=True)
    sp.add_argument("--out-mask", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--draw-seed", type=int, default=0)
    sp.add_argument("--hflip-prob", type=float, default=0.5)
    sp.add_argument("--vflip-prob", type=float, default=0.5)
    sp.add_argument("--rotate-max", type=float, default=20.0,
                    help="angle drawn from [-rotate-max, rotate-max] degrees")
    sp.add_argument("--translate-max", type=float, default=0.10,
                    help="shift drawn from [-translate-max, translate-max] per axis")
    sp.add_argument("--threshold", type=int, default=128)
    sp.set_defaults(func=_cmd_augment)

    sp = sub.add_parser("eval-phase1", help="sweep point methods over a mask set")
    sp.add_argument("--coarse-dir", required=True)
    sp.add_argument("--truth-dir", required=True)
    sp.add_argument("--methods", type=_parse_methods, default=list(poi.PoiMethod),
                    help="comma-separated subset of ms,coga,rcoga (default: all)")
    sp.add_argument("--refiner", default="identity",
                    help='"identity" or a command prefix, e.g. "python refine.py"')
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--threshold", type=int, default=128)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--train-fraction", type=int, default=100)
    sp.add_argument("--unet-epochs", type=int, default=100)
    _add_poi_flags(sp)
    sp.set_defaults(func=_cmd_eval_phase1)

    sp = sub.add_parser("eval-phase2", help="sweep a training factor with one method")
    sp.add_argument("--runs", type=_parse_runs, required=True,
                    help="comma-separated VALUE=COARSE_DIR pairs, e.g. 20=f20,40=f40")
    sp.add_argument("--factor", choices=["train_fraction", "unet_epochs"],
                    default="train_fraction")
    sp.add_argument("--method", type=poi.PoiMethod, choices=list(poi.PoiMethod),
                    default=poi.PoiMethod.COGA, metavar="{ms,coga,rcoga}")
    sp.add_argument("--truth-dir", required=True)
    sp.add_argument("--refiner", default="identity")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--threshold", type=int, default=128)
    sp.add_argument("--workers", type=int, default=1)
    _add_poi_flags(sp)
    sp.set_defaults(func=_cmd_eval_phase2)

    sp = sub.add_parser("anova", help="one-way ANOVA over a group,value CSV")
    sp.add_argument("--data", required=True)
    sp.set_defaults(func=_cmd_anova)

    return parser


def _find_config_path(argv: list[str]) -> str | None:
    for i, arg in enumerate(argv):
        if arg == "--config":
            return argv[i + 1] if i + 1 < len(argv) else None
        if arg.startswith("--config="):
            return arg.split("=", 1)[1]
    return os.environ.get(CONFIG_ENV_VAR) or None


def _load_config(path: str) -> dict:
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"config file {path}: {exc}") from None
    if not parser.has_section("defaults"):
        raise ConfigError(f"config file {path}: missing [defaults] section")
    values = {}
    for key, raw in parser.items("defaults"):
        if key not in _CONFIG_CONVERTERS:
            raise ConfigError(f"config file {path}: unknown key {key!r}")
        try:
            values[key] = _CONFIG_CONVERTERS[key](raw)
        except ValueError:
            raise ConfigError(f"config file {path}: bad value for {key}: {raw!r}") from None
    return values


def _apply_config(parser: argparse.ArgumentParser, config: dict) -> None:
    """Rewrite matching argument defaults; explicit flags still win."""
    stack = [parser]
    while stack:
        p = stack.pop()
        for action in p._actions:
            if isinstance(action, argparse._SubParsersAction):
                stack.extend(action.choices.values())
            elif action.dest in config:
                action.default = config[action.dest]
                action.required = False


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        config_path = _find_config_path(argv)
        if config_path:
            _apply_config(parser, _load_config(config_path))
        args = parser.parse_args(argv)
        args.func(args)
        return 0
    except WearPromptError as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1
    except (OSError, ValueError) as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1


def entrypoint() -> None:
    sys.exit(main())
