import numpy as np
import pytest

from cxrgen import neuralnet as nn
from cxrgen.bundle import MAGIC, ModelBundle, load_bundle, save_bundle
from cxrgen.classifier import Abnormality, TrainedModel, predict
from cxrgen.errors import BadMagic, IncompleteBundle, TruncatedFile, VersionMismatch
from cxrgen.imaging import preprocess
from cxrgen.reportgen import default_master_text


class TestRoundTrip:
    def test_predictions_identical(self, fixture_bundle, fixture_image_bytes, tmp_path):
        path = tmp_path / "bundle.cxrm"
        save_bundle(fixture_bundle, path)
        loaded = load_bundle(path)
        pre = preprocess(fixture_image_bytes)
        segs = {"I": pre.seg1, "II": pre.seg2, "III": pre.seg3}
        for tag, model in fixture_bundle.models.items():
            seg = segs[model.abnormality.segment.tag].pixels
            p_before, l_before, _ = predict(model, seg)
            p_after, l_after, _ = predict(loaded.models[tag], seg)
            assert p_after == p_before  # bit-identical: fixture is pre-quantized
            assert l_after == l_before

    def test_metadata_preserved(self, fixture_bundle, tmp_path):
        path = tmp_path / "bundle.cxrm"
        save_bundle(fixture_bundle, path)
        loaded = load_bundle(path)
        for tag in fixture_bundle.models:
            assert loaded.models[tag].threshold == fixture_bundle.models[tag].threshold
            assert loaded.models[tag].train_accuracy == fixture_bundle.models[tag].train_accuracy
        assert loaded.master_text == fixture_bundle.master_text

    def test_layer_structure_preserved(self, fixture_bundle, tmp_path):
        path = tmp_path / "bundle.cxrm"
        save_bundle(fixture_bundle, path)
        loaded = load_bundle(path)
        original = fixture_bundle.models["effusion"].network
        restored = loaded.models["effusion"].network
        assert [l.kind for l in restored.layers] == [l.kind for l in original.layers]
        for pa, pb in zip(original.params(), restored.params()):
            np.testing.assert_array_equal(pa, pb)

    def test_file_is_stable(self, fixture_bundle, tmp_path):
        a, b = tmp_path / "a.cxrm", tmp_path / "b.cxrm"
        save_bundle(fixture_bundle, a)
        save_bundle(fixture_bundle, b)
        assert a.read_bytes() == b.read_bytes()


class TestErrors:
    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x.cxrm"
        path.write_bytes(b"XXXXXXthis is not a bundle")
        with pytest.raises(BadMagic):
            load_bundle(path)

    def test_version_mismatch(self, tmp_path):
        path = tmp_path / "x.cxrm"
        path.write_bytes(b"CXRM99" + b"\x00" * 16)
        with pytest.raises(VersionMismatch):
            load_bundle(path)

    def test_truncated_mid_payload(self, fixture_bundle, tmp_path):
        path = tmp_path / "full.cxrm"
        save_bundle(fixture_bundle, path)
        data = path.read_bytes()
        cut = tmp_path / "cut.cxrm"
        cut.write_bytes(data[: len(data) // 2])
        with pytest.raises(TruncatedFile):
            load_bundle(cut)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "x.cxrm"
        path.write_bytes(MAGIC)
        with pytest.raises(TruncatedFile):
            load_bundle(path)

    def test_incomplete_bundle_rejected(self):
        net = nn.build_network(8, seed=0)
        model = TrainedModel(abnormality=Abnormality("cardiomegaly"), network=net)
        with pytest.raises(IncompleteBundle):
            ModelBundle(models={"cardiomegaly": model}, master_text=default_master_text())

    def test_mismatched_key_rejected(self):
        net = nn.build_network(8, seed=0)
        model = TrainedModel(abnormality=Abnormality("cardiomegaly"), network=net)
        with pytest.raises(IncompleteBundle):
            ModelBundle(
                models={"cardiomegaly": model, "effusion": model, "consolidation": model},
                master_text=default_master_text(),
            )
