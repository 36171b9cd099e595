"""Segment Anything refiner backend for point-prompt bundles.

Consumes the prompt bundle JSON contract plus a lowres mask hint and emits
a refined binary mask PNG.  The model checkpoint is the caller's to supply;
the package itself stays importable without torch installed.
"""
from .bundle import Bundle, read_bundle
from .errors import BridgeError, SchemaError
from .predictor import (
    DEFAULT_VARIANT,
    MODEL_VARIANTS,
    BridgeConfig,
    Predictor,
    load_predictor,
)
from .refiner import FOREGROUND, LOWRES_SIZE, refine, refine_bundle

__version__ = "0.1.0"

__all__ = [
    "Bundle",
    "read_bundle",
    "BridgeError",
    "SchemaError",
    "BridgeConfig",
    "Predictor",
    "load_predictor",
    "MODEL_VARIANTS",
    "DEFAULT_VARIANT",
    "refine",
    "refine_bundle",
    "LOWRES_SIZE",
    "FOREGROUND",
    "__version__",
]
