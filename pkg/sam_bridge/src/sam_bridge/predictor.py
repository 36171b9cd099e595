"""Model loading behind a small predictor interface.

Anything with SamPredictor's `set_image` / `predict` surface can serve as the
predictor, so tests can substitute a stub and the CLI can stay importable
when the model package is absent.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from .errors import BridgeError

MODEL_VARIANTS = ("vit_b", "vit_l", "vit_h")
DEFAULT_VARIANT = "vit_l"


class Predictor(Protocol):
    def set_image(self, image: np.ndarray) -> None: ...

    def predict(
        self,
        point_coords: np.ndarray | None,
        point_labels: np.ndarray | None,
        mask_input: np.ndarray | None,
        multimask_output: bool,
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]: ...


@dataclass(frozen=True)
class BridgeConfig:
    checkpoint_path: str
    model_variant: str = DEFAULT_VARIANT
    device: str = "cpu"

    def __post_init__(self) -> None:
        if self.model_variant not in MODEL_VARIANTS:
            raise BridgeError(
                f"unknown model variant {self.model_variant!r}; "
                f"expected one of {', '.join(MODEL_VARIANTS)}"
            )
        if not self.checkpoint_path:
            raise BridgeError("checkpoint path is required (flag or SAM_BRIDGE_CHECKPOINT)")


def load_predictor(config: BridgeConfig) -> Predictor:
    """Build the real model predictor; raises BridgeError with a remedy when
    the checkpoint or the model package is missing."""
    if not Path(config.checkpoint_path).is_file():
        raise BridgeError(f"checkpoint not found: {config.checkpoint_path}")
    try:
        from segment_anything import SamPredictor, sam_model_registry
    except ImportError:
        raise BridgeError(
            "segment-anything is not installed; install the model extra: "
            "pip install 'sam-bridge[sam]'"
        ) from None
    try:
        sam = sam_model_registry[config.model_variant](checkpoint=config.checkpoint_path)
    except (RuntimeError, KeyError) as exc:
        raise BridgeError(
            f"cannot load {config.model_variant} checkpoint "
            f"{config.checkpoint_path}: {exc}"
        ) from None
    sam.to(config.device)
    return SamPredictor(sam)
