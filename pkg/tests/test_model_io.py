"""Unit tests for the model file: roundtrip fidelity and corruption detection."""

import json

import numpy as np
import pytest

from hdmrgp.data import Dataset, fit_scaler
from hdmrgp.gpr import predict_mean, predict_variance, train
from hdmrgp.hdmr import random_amplitude_spec, uniform_spec
from hdmrgp.kernels import BaseKernel
from hdmrgp.model_io import ModelFileError, load_model, save_model


@pytest.fixture
def model():
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(40, 3)) * 4.0 - 1.0
    y = 10.0 + np.sin(X[:, 0]) + X[:, 1] * X[:, 2]
    dataset = Dataset(X, y)
    scaler = fit_scaler(dataset, "minmax")
    spec = random_amplitude_spec(3, 2, BaseKernel("matern52", 0.6), seed=1)
    return train(spec, scaler.transform_x(X), scaler.transform_y(y), 1e-6, scaler)


def test_roundtrip_preserves_predictions(model, tmp_path):
    path = tmp_path / "m.npz"
    save_model(model, path)
    back = load_model(path)
    rng = np.random.default_rng(2)
    queries = rng.uniform(size=(15, 3))
    np.testing.assert_array_equal(predict_mean(back, queries), predict_mean(model, queries))
    np.testing.assert_array_equal(
        predict_variance(back, queries), predict_variance(model, queries)
    )
    assert back.log_ml == model.log_ml
    assert back.spec == model.spec
    assert back.scaler.kind == model.scaler.kind


def test_corrupted_targets_detected(model, tmp_path):
    path = tmp_path / "m.npz"
    save_model(model, path)
    with np.load(path) as archive:
        arrays = {k: archive[k] for k in archive.files}
    arrays["f"] = arrays["f"] + 0.01
    np.savez(path, **arrays)
    with pytest.raises(ModelFileError, match="residual"):
        load_model(path)


def test_corrupted_coefficients_detected(model, tmp_path):
    path = tmp_path / "m.npz"
    save_model(model, path)
    with np.load(path) as archive:
        arrays = {k: archive[k] for k in archive.files}
    arrays["coef"] = arrays["coef"] * 1.001
    np.savez(path, **arrays)
    with pytest.raises(ModelFileError, match="residual"):
        load_model(path)


def test_unknown_version_rejected(model, tmp_path):
    path = tmp_path / "m.npz"
    save_model(model, path)
    with np.load(path) as archive:
        arrays = {k: archive[k] for k in archive.files}
    meta = json.loads(bytes(arrays["meta"]).decode())
    meta["format_version"] = 99
    arrays["meta"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
    np.savez(path, **arrays)
    with pytest.raises(ModelFileError, match="version"):
        load_model(path)


def test_garbage_file_rejected(tmp_path):
    path = tmp_path / "m.npz"
    path.write_bytes(b"not actually a model file")
    with pytest.raises(ModelFileError):
        load_model(path)


def test_missing_arrays_rejected(model, tmp_path):
    path = tmp_path / "m.npz"
    save_model(model, path)
    with np.load(path) as archive:
        arrays = {k: archive[k] for k in archive.files if k != "coef"}
    np.savez(path, **arrays)
    with pytest.raises(ModelFileError, match="malformed"):
        load_model(path)


def test_identity_scaler_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    X = rng.uniform(size=(20, 2))
    y = X[:, 0] + X[:, 1]
    spec = uniform_spec(2, 1, BaseKernel("se", 1.0))
    model = train(spec, X, y, 1e-8)
    path = tmp_path / "m.npz"
    save_model(model, path)
    back = load_model(path)
    np.testing.assert_array_equal(predict_mean(back, X), predict_mean(model, X))
