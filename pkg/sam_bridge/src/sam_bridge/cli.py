"""Refiner command implementing the external-command contract:

    sam-bridge [options] PROMPT_JSON IMAGE OUT_MASK

Exit 0 on success with the mask written to OUT_MASK; exit 2 when the prompt
bundle violates the JSON schema (nothing is written); exit 1 on processing
errors such as a missing checkpoint.  Errors go to stderr as one JSON line.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Callable

from .bundle import read_bundle
from .errors import BridgeError, SchemaError
from .predictor import (
    DEFAULT_VARIANT,
    MODEL_VARIANTS,
    BridgeConfig,
    Predictor,
    load_predictor,
)
from .refiner import refine_bundle

CHECKPOINT_ENV_VAR = "SAM_BRIDGE_CHECKPOINT"


class _JsonErrorParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # noqa: D102 - argparse override
        print(json.dumps({"error": "usage", "message": message}), file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    parser = _JsonErrorParser(
        prog="sam-bridge",
        description="Refine a coarse segmentation with a Segment Anything checkpoint.",
    )
    parser.add_argument("prompt_json", help="prompt bundle path")
    parser.add_argument("image", help="image to segment")
    parser.add_argument("out_mask", help="output mask path (PNG, foreground = 255)")
    parser.add_argument(
        "--checkpoint",
        default=os.environ.get(CHECKPOINT_ENV_VAR, ""),
        help=f"model checkpoint path (default: ${CHECKPOINT_ENV_VAR})",
    )
    parser.add_argument("--model-variant", choices=list(MODEL_VARIANTS), default=DEFAULT_VARIANT)
    parser.add_argument("--device", default="cpu", help='e.g. "cpu" or "cuda"')
    return parser


def main(
    argv: list[str] | None = None,
    predictor_factory: Callable[[], Predictor] | None = None,
) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        bundle = read_bundle(args.prompt_json)
        if predictor_factory is None:
            config = BridgeConfig(
                checkpoint_path=args.checkpoint,
                model_variant=args.model_variant,
                device=args.device,
            )
            predictor = load_predictor(config)
        else:
            predictor = predictor_factory()
        refine_bundle(
            bundle, Path(args.prompt_json).parent, args.image, args.out_mask, predictor
        )
        sys.stdout.write(json.dumps({"out": args.out_mask}) + "\n")
        return 0
    except SchemaError as exc:
        print(json.dumps({"error": "SchemaError", "message": str(exc)}), file=sys.stderr)
        return 2
    except (BridgeError, OSError) as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1


def entrypoint() -> None:
    sys.exit(main())
