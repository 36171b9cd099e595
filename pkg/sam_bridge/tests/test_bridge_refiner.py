"""Refine contract: inputs reach the predictor in the documented form and
the best candidate comes back as a binary PNG matching the image size."""
import numpy as np
import pytest
from bridge_helpers import FakePredictor, bundle_obj, make_bundle_files, write_bundle
from PIL import Image

from sam_bridge import BridgeError, SchemaError, read_bundle, refine
from sam_bridge.refiner import load_lowres, refine_bundle


def read_mask(path):
    with Image.open(path) as img:
        assert img.mode == "L"
        return np.asarray(img)


@pytest.mark.parametrize("height,width", [(64, 64), (256, 256), (100, 160), (37, 53)])
def test_output_contract(tmp_path, height, width):
    files = make_bundle_files(tmp_path, width=width, height=height, points=[(0, 0, 1)])
    out = tmp_path / "refined.png"
    refine(files["bundle"], files["image"], out, FakePredictor())
    mask = read_mask(out)
    assert mask.shape == (height, width)
    assert set(np.unique(mask)) <= {0, 255}
    assert mask.any() and not mask.all()


def test_highest_score_candidate_wins(tmp_path):
    files = make_bundle_files(tmp_path, width=160, height=100)
    out = tmp_path / "refined.png"
    refine(files["bundle"], files["image"], out, FakePredictor())
    mask = read_mask(out)
    assert (mask[:, :80] == 255).all()
    assert (mask[:, 80:] == 0).all()


def test_identity_size_round_trips_lowres(tmp_path):
    files = make_bundle_files(tmp_path, width=256, height=256)
    out = tmp_path / "refined.png"
    refine(files["bundle"], files["image"], out, FakePredictor())
    with Image.open(files["lowres"]) as img:
        lowres = np.asarray(img)
    assert (read_mask(out) == lowres).all()


def test_predictor_receives_documented_inputs(tmp_path):
    files = make_bundle_files(tmp_path, points=[(10, 12, 1), (3, 4, 0)])
    predictor = FakePredictor()
    refine(files["bundle"], files["image"], tmp_path / "out.png", predictor)
    assert predictor.image.shape == (64, 64, 3)
    call = predictor.calls[0]
    coords = call["point_coords"]
    labels = call["point_labels"]
    assert coords.dtype == np.float32 and coords.shape == (2, 2)
    assert (coords == np.array([[10.0, 12.0], [3.0, 4.0]])).all()
    assert labels.dtype == np.int32 and (labels == np.array([1, 0])).all()
    dense = call["mask_input"]
    assert dense.shape == (1, 256, 256) and dense.dtype == np.float32
    assert set(np.unique(dense)) <= {0.0, 1.0}
    assert call["multimask_output"] is True


def test_empty_points_uses_mask_only(tmp_path):
    files = make_bundle_files(tmp_path, points=[])
    predictor = FakePredictor()
    out = tmp_path / "out.png"
    refine(files["bundle"], files["image"], out, predictor)
    call = predictor.calls[0]
    assert call["point_coords"] is None and call["point_labels"] is None
    assert out.exists()


def test_lowres_threshold_at_128(tmp_path):
    lowres = np.zeros((256, 256), dtype=np.uint8)
    lowres[0, :] = 127
    lowres[1, :] = 128
    files = make_bundle_files(tmp_path, width=256, height=256, lowres=lowres)
    refine(files["bundle"], files["image"], tmp_path / "out.png", FakePredictor())
    mask = read_mask(tmp_path / "out.png")
    assert (mask[0, :] == 0).all()
    assert (mask[1, :] == 255).all()
    assert (mask[2:, :] == 0).all()


def test_lowres_resolved_relative_to_bundle(tmp_path):
    files = make_bundle_files(tmp_path)
    sub = tmp_path / "hints"
    sub.mkdir()
    (tmp_path / "lowres.png").rename(sub / "lowres.png")
    obj = dict(files["obj"])
    obj["lowres_mask_path"] = "hints/lowres.png"
    write_bundle(files["bundle"], obj)
    out = tmp_path / "out.png"
    refine(files["bundle"], files["image"], out, FakePredictor())
    assert out.exists()


class _WrongSizePredictor(FakePredictor):
    def predict(self, point_coords, point_labels, mask_input, multimask_output):
        masks, scores, logits = super().predict(
            point_coords, point_labels, mask_input, multimask_output
        )
        return masks[:, :-1, :], scores, logits


class _FlatPredictor(FakePredictor):
    def predict(self, point_coords, point_labels, mask_input, multimask_output):
        masks, scores, logits = super().predict(
            point_coords, point_labels, mask_input, multimask_output
        )
        return masks[0], scores[:1], logits


class _ScorelessPredictor(FakePredictor):
    def predict(self, point_coords, point_labels, mask_input, multimask_output):
        masks, scores, logits = super().predict(
            point_coords, point_labels, mask_input, multimask_output
        )
        return masks, scores[:2], logits


@pytest.mark.parametrize(
    "predictor_cls", [_WrongSizePredictor, _FlatPredictor, _ScorelessPredictor]
)
def test_malformed_predictor_output_rejected(tmp_path, predictor_cls):
    files = make_bundle_files(tmp_path)
    with pytest.raises(BridgeError, match="predictor"):
        refine(files["bundle"], files["image"], tmp_path / "out.png", predictor_cls())


def test_wrong_size_lowres_is_schema_error(tmp_path):
    files = make_bundle_files(tmp_path)
    small = np.zeros((128, 128), dtype=np.uint8)
    Image.fromarray(small, mode="L").save(files["lowres"])
    with pytest.raises(SchemaError, match="256x256"):
        refine(files["bundle"], files["image"], tmp_path / "out.png", FakePredictor())


def test_non_grayscale_lowres_is_schema_error(tmp_path):
    files = make_bundle_files(tmp_path)
    rgb = np.zeros((256, 256, 3), dtype=np.uint8)
    Image.fromarray(rgb, mode="RGB").save(files["lowres"])
    with pytest.raises(SchemaError, match="grayscale"):
        refine(files["bundle"], files["image"], tmp_path / "out.png", FakePredictor())


def test_missing_image_is_bridge_error(tmp_path):
    files = make_bundle_files(tmp_path)
    files["image"].unlink()
    with pytest.raises(BridgeError, match="image not found"):
        refine(files["bundle"], files["image"], tmp_path / "out.png", FakePredictor())


def test_missing_lowres_is_bridge_error(tmp_path):
    files = make_bundle_files(tmp_path)
    files["lowres"].unlink()
    with pytest.raises(BridgeError, match="not found"):
        refine(files["bundle"], files["image"], tmp_path / "out.png", FakePredictor())


def test_load_lowres_values(tmp_path):
    arr = np.zeros((256, 256), dtype=np.uint8)
    arr[10:20, 30:40] = 200
    Image.fromarray(arr, mode="L").save(tmp_path / "m.png")
    dense = load_lowres(tmp_path / "m.png")
    assert dense.dtype == np.float32
    assert dense.sum() == 100.0
    assert dense[15, 35] == 1.0 and dense[0, 0] == 0.0


def test_refine_bundle_matches_refine(tmp_path):
    files = make_bundle_files(tmp_path, width=80, height=48)
    out_a = tmp_path / "a.png"
    out_b = tmp_path / "b.png"
    refine(files["bundle"], files["image"], out_a, FakePredictor())
    bundle = read_bundle(files["bundle"])
    refine_bundle(bundle, tmp_path, files["image"], out_b, FakePredictor())
    assert (read_mask(out_a) == read_mask(out_b)).all()
