"""The refine operation: bundle + image in, selected binary mask out.

The point coordinates go to the model as given (x = column, y = row, label
1 positive / 0 negative) along with the 256x256 low-res mask as a dense
prompt; of the candidate masks the highest-scoring one is kept, binarized,
and written with foreground = 255.  No other post-processing happens, so the
output is attributable to the model alone.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .bundle import Bundle, read_bundle
from .errors import BridgeError, SchemaError
from .predictor import Predictor

LOWRES_SIZE = 256
FOREGROUND = 255
THRESHOLD = 128


def load_rgb(path: str | Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"))
    except FileNotFoundError:
        raise BridgeError(f"image not found: {path}") from None
    except (OSError, UnidentifiedImageError) as exc:
        raise BridgeError(f"cannot read image {path}: {exc}") from None


def load_lowres(path: str | Path) -> np.ndarray:
    """256x256 low-res mask as float32 {0, 1}, ready to be a dense prompt."""
    try:
        with Image.open(path) as img:
            if img.mode != "L":
                raise SchemaError(f"low-res mask {path} must be 8-bit grayscale, is {img.mode}")
            arr = np.asarray(img)
    except FileNotFoundError:
        raise BridgeError(f"low-res mask not found: {path}") from None
    except UnidentifiedImageError as exc:
        raise BridgeError(f"cannot read low-res mask {path}: {exc}") from None
    if arr.shape != (LOWRES_SIZE, LOWRES_SIZE):
        raise SchemaError(
            f"low-res mask {path} must be {LOWRES_SIZE}x{LOWRES_SIZE}, "
            f"is {arr.shape[0]}x{arr.shape[1]}"
        )
    return (arr >= THRESHOLD).astype(np.float32)


def refine_bundle(
    bundle: Bundle,
    bundle_dir: Path,
    image_path: str | Path,
    out_path: str | Path,
    predictor: Predictor,
) -> None:
    image = load_rgb(image_path)
    lowres = load_lowres(bundle_dir / bundle.lowres_mask_path)
    predictor.set_image(image)
    if bundle.points:
        coords = np.array([(x, y) for x, y, _ in bundle.points], dtype=np.float32)
        labels = np.array([label for _, _, label in bundle.points], dtype=np.int32)
    else:
        coords, labels = None, None
    masks, scores, _ = predictor.predict(
        point_coords=coords,
        point_labels=labels,
        mask_input=lowres[np.newaxis, :, :],
        multimask_output=True,
    )
    masks = np.asarray(masks)
    scores = np.asarray(scores, dtype=np.float64)
    if masks.ndim != 3 or masks.shape[0] == 0 or scores.shape != (masks.shape[0],):
        raise BridgeError(
            f"predictor returned masks {masks.shape} with scores {scores.shape}"
        )
    if masks.shape[1:] != image.shape[:2]:
        raise BridgeError(
            f"predictor mask is {masks.shape[1]}x{masks.shape[2]}, "
            f"image is {image.shape[0]}x{image.shape[1]}"
        )
    best = masks[int(np.argmax(scores))]
    out = (np.asarray(best) > 0).astype(np.uint8) * FOREGROUND
    Image.fromarray(out, mode="L").save(out_path, format="PNG")


def refine(
    bundle_path: str | Path,
    image_path: str | Path,
    out_path: str | Path,
    predictor: Predictor,
) -> None:
    bundle = read_bundle(bundle_path)
    refine_bundle(bundle, Path(bundle_path).parent, image_path, out_path, predictor)
