"""Shared fixtures-in-spirit for the bridge tests.

Kept as a plain module (imported explicitly) rather than a conftest so the
bridge suite can run side by side with other test trees.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

LOWRES = 256


def left_half_lowres() -> np.ndarray:
    """256x256 uint8 mask, left half foreground."""
    arr = np.zeros((LOWRES, LOWRES), dtype=np.uint8)
    arr[:, : LOWRES // 2] = 255
    return arr


def write_bundle(path: Path, obj: dict) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def bundle_obj(
    width: int,
    height: int,
    points: list[tuple[int, int, int]],
    image_id: str = "tool_01_cut",
) -> dict:
    return {
        "image_id": image_id,
        "image_path": "image.png",
        "image_width": width,
        "image_height": height,
        "points": [{"x": x, "y": y, "label": label} for x, y, label in points],
        "lowres_mask_path": "lowres.png",
        "source": {"method": "coga", "unet_epochs": 0, "train_fraction": 100},
    }


def make_bundle_files(
    root: Path,
    width: int = 64,
    height: int = 64,
    points: list[tuple[int, int, int]] | None = None,
    lowres: np.ndarray | None = None,
) -> dict:
    """Write image.png, lowres.png, and prompt.json under root.

    Returns the paths plus the bundle dict for mutation by callers.
    """
    if points is None:
        points = [(min(10, width - 1), min(12, height - 1), 1), (3, 4, 0)]
    if lowres is None:
        lowres = left_half_lowres()
    rng = np.random.default_rng(width * 1000 + height)
    image = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    Image.fromarray(image, mode="RGB").save(root / "image.png")
    Image.fromarray(lowres, mode="L").save(root / "lowres.png")
    obj = bundle_obj(width, height, points)
    write_bundle(root / "prompt.json", obj)
    return {
        "bundle": root / "prompt.json",
        "image": root / "image.png",
        "lowres": root / "lowres.png",
        "obj": obj,
    }


class FakePredictor:
    """Stands in for the model: deterministic candidates, recorded calls.

    Candidate 1 (the score winner) is the dense prompt scaled up to the
    image size by nearest-neighbor, so tests can predict the output exactly.
    """

    def __init__(self) -> None:
        self.image = None
        self.calls = []

    def set_image(self, image: np.ndarray) -> None:
        self.image = np.asarray(image)

    def predict(self, point_coords, point_labels, mask_input, multimask_output):
        self.calls.append(
            {
                "point_coords": point_coords,
                "point_labels": point_labels,
                "mask_input": mask_input,
                "multimask_output": multimask_output,
            }
        )
        h, w = self.image.shape[:2]
        lowres = np.asarray(mask_input)[0] > 0.5
        rows = (np.arange(h) * LOWRES) // h
        cols = (np.arange(w) * LOWRES) // w
        upsampled = lowres[np.ix_(rows, cols)]
        masks = np.stack(
            [np.zeros((h, w), dtype=bool), upsampled, np.ones((h, w), dtype=bool)]
        )
        scores = np.array([0.1, 0.9, 0.3], dtype=np.float32)
        logits = np.zeros((3, LOWRES, LOWRES), dtype=np.float32)
        return masks, scores, logits
