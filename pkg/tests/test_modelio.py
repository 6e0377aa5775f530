import json

import numpy as np
import pytest

from texturekit.errors import DataValidationError
from texturekit.evaluation import EvalConfig, fit_fusion, prepare
from texturekit.features import FeatureConfig
from texturekit.fusion import classify, classify_features
from texturekit.modelio import (load_fusion, load_nmf, load_report, load_svm, read_features_csv,
                                save_fusion, save_nmf, save_report, save_svm, write_features_csv)
from texturekit.nmf import NmfConfig, NmfModel
from texturekit.preprocess import PreprocessConfig
from texturekit.svm import KernelSpec, fit_svm, train_svm

FAST = FeatureConfig(preprocess=PreprocessConfig(levels=8), nmf_shape=(16, 16))


@pytest.fixture
def svm_model(rng):
    X = rng.normal(size=(30, 5))
    y = np.where(X[:, 0] + 0.3 * rng.normal(size=30) > 0, 1, -1)
    return fit_svm(X, y, KernelSpec.rbf(1.7), C=2.0)


def test_svm_round_trip(tmp_path, svm_model, rng):
    p = tmp_path / "m.svm.json"
    save_svm(svm_model, p)
    back = load_svm(p)
    assert back.w_norm == svm_model.w_norm and back.bias == svm_model.bias
    assert np.array_equal(back.alphas, svm_model.alphas)
    assert np.array_equal(back.support_vectors, svm_model.support_vectors)
    assert np.array_equal(back.feature_scale, svm_model.feature_scale)
    assert back.kernel == svm_model.kernel
    T = rng.normal(size=(100, 5))
    assert np.array_equal(back.scores(T), svm_model.scores(T))


def test_nmf_round_trip(tmp_path, rng):
    model = NmfModel(rng.random((12, 3)), NmfConfig(rank=3, seed=4), 0.125, {"input": "pixels"})
    save_nmf(model, tmp_path / "b.nmf.json")
    back = load_nmf(tmp_path / "b.nmf.json")
    assert np.array_equal(back.basis, model.basis)
    assert back.config == model.config and back.representation == model.representation


def test_corrupted_byte_detected(tmp_path, svm_model):
    p = tmp_path / "m.svm.json"
    save_svm(svm_model, p)
    text = p.read_text()
    i = text.index('"bias": ') + len('"bias": ')
    digit = text[i + 1] if text[i] == "-" else text[i]
    pos = i + 1 if text[i] == "-" else i
    p.write_text(text[:pos] + ("7" if digit != "7" else "3") + text[pos + 1:])
    with pytest.raises(DataValidationError, match="hash mismatch"):
        load_svm(p)


def test_unsupported_version(tmp_path, svm_model):
    p = tmp_path / "m.svm.json"
    save_svm(svm_model, p)
    env = json.loads(p.read_text())
    env["schema_version"] = 99
    p.write_text(json.dumps(env))
    with pytest.raises(DataValidationError, match="unsupported version"):
        load_svm(p)


def test_wrong_kind_and_invalid_json(tmp_path, svm_model):
    p = tmp_path / "m.svm.json"
    save_svm(svm_model, p)
    with pytest.raises(DataValidationError, match="expected a nmf"):
        load_nmf(p)
    p.write_text("{not json")
    with pytest.raises(DataValidationError):
        load_svm(p)


def test_invariant_violation_names_field(tmp_path):
    model = train_svm([[-1.0], [1.0]], [-1, 1], KernelSpec.linear(), 10)
    model.alphas = model.alphas * np.array([1.0, 2.0])
    save_svm(model, tmp_path / "bad.svm.json")
    with pytest.raises(DataValidationError, match="svm.alphas"):
        load_svm(tmp_path / "bad.svm.json")


def test_fusion_round_trip_bit_exact(tmp_path, small_synth, rng):
    data = prepare(small_synth, FAST)
    cfg = EvalConfig(nmf=NmfConfig(rank=3, max_iters=200), features=FAST)
    fm = fit_fusion(data, np.arange(len(data.ids)), cfg, nmf_seed=0)
    save_fusion(fm, tmp_path / "m.fusion.json")
    back = load_fusion(tmp_path / "m.fusion.json")
    for _ in range(100):
        h = data.haralick[rng.integers(len(data.ids))] * (1 + 0.2 * rng.normal(size=28))
        n = rng.random(fm.encoder.rank)
        assert classify_features(fm, h, n) == classify_features(back, h, n)
    for img in small_synth.images[:3]:
        assert classify(fm, img) == classify(back, img)


def test_report_round_trip(tmp_path):
    rep = {"metrics": {"sn": 78.57142857142857, "sp": None, "ac": 0.1 + 0.2}}
    save_report(rep, tmp_path / "r.report.json", manifest={"created": "now"})
    assert load_report(tmp_path / "r.report.json") == rep


def test_features_csv_round_trip(tmp_path, rng):
    X = rng.normal(size=(4, 3)) * 1e-7
    write_features_csv(tmp_path / "f.csv", ["a", "b", "c", "d"], X, ["x", "y", "z"], [1, -1, 1, -1])
    ids, Y, cols, labels = read_features_csv(tmp_path / "f.csv")
    assert ids == ["a", "b", "c", "d"] and cols == ["x", "y", "z"]
    assert np.array_equal(X, Y) and list(labels) == [1, -1, 1, -1]
    write_features_csv(tmp_path / "g.csv", ["a"], X[:1], ["x", "y", "z"])
    assert read_features_csv(tmp_path / "g.csv")[3] is None
