import math
import struct

import numpy as np
import pytest

from wcosim.classifiers import (
    predict,
    predict_any,
    train_knn,
    train_pca_pipeline,
    train_whitened_cosine,
)
from wcosim.dataset import NORMAL, ROSACEA, PreprocessSpec, SyntheticSpec, generate_synthetic
from wcosim.model_io import FORMAT_VERSION, MAGIC, ModelFormatError, load_model, save_model


def same_prediction(a, b):
    def eq(x, y):
        return (math.isnan(x) and math.isnan(y)) or x == y

    return a.label == b.label and eq(a.sim_normal, b.sim_normal) and eq(a.sim_rosacea, b.sim_rosacea)


@pytest.fixture
def synthetic_training():
    spec = SyntheticSpec(d=20, n=14, m=11, separation=7.0, sigma=1.0, seed=44)
    return generate_synthetic(spec)


def test_whitened_cosine_round_trip_bit_identical(tmp_path, synthetic_training):
    xn, xr, _ = synthetic_training
    model = train_whitened_cosine(xn, xr)
    path = tmp_path / "model.wcs"
    save_model(model, path)
    loaded = load_model(path)

    assert np.array_equal(model.grand_mean, loaded.grand_mean)
    assert np.array_equal(model.mean_normal, loaded.mean_normal)
    assert np.array_equal(model.mean_rosacea, loaded.mean_rosacea)
    assert np.array_equal(model.whitening.w, loaded.whitening.w)
    assert np.array_equal(model.whitening.eigenvalues, loaded.whitening.eigenvalues)
    assert model.train_counts == loaded.train_counts
    assert model.preprocess == loaded.preprocess

    rng = np.random.default_rng(45)
    for _ in range(100):
        x = rng.standard_normal(20)
        assert same_prediction(predict(model, x), predict(loaded, x))


@pytest.mark.parametrize("metric", ["l1", "l2", "cosine"])
def test_knn_round_trip(tmp_path, synthetic_training, metric):
    xn, xr, labels = synthetic_training
    pooled = np.concatenate([xn, xr], axis=1)
    model = train_knn(pooled, labels, k=3, metric=metric)
    path = tmp_path / "knn.wcs"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.k == 3 and loaded.metric == metric
    assert loaded.labels == model.labels
    assert np.array_equal(loaded.training_columns, model.training_columns)
    rng = np.random.default_rng(46)
    for _ in range(25):
        x = rng.standard_normal(20)
        assert same_prediction(predict_any(model, x), predict_any(loaded, x))


@pytest.mark.parametrize("head", ["knn-l2", "nearest-mean"])
def test_pca_pipeline_round_trip(tmp_path, synthetic_training, head):
    xn, xr, _ = synthetic_training
    model = train_pca_pipeline(xn, xr, n_components=5, inner=head, knn_k=3)
    path = tmp_path / "pca.wcs"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.n_components == 5
    assert np.array_equal(loaded.projection, model.projection)
    rng = np.random.default_rng(47)
    for _ in range(25):
        x = rng.standard_normal(20)
        assert same_prediction(predict_any(model, x), predict_any(loaded, x))


def test_image_preprocess_spec_survives(tmp_path, synthetic_training):
    xn, xr, _ = synthetic_training
    # d=20 is not a real image geometry, but the spec block is independent of d
    prep = PreprocessSpec(512, 512, 3, "unit")
    model = train_knn(np.concatenate([xn, xr], axis=1), [NORMAL] * 14 + [ROSACEA] * 11,
                      k=1, preprocess=prep)
    path = tmp_path / "m.wcs"
    save_model(model, path)
    assert load_model(path).preprocess == prep


def test_header_layout_matches_format_doc(tmp_path, synthetic_training):
    xn, xr, _ = synthetic_training
    model = train_whitened_cosine(xn, xr)
    path = tmp_path / "model.wcs"
    save_model(model, path)
    buf = path.read_bytes()

    magic, version, kind, width, height, channels, scale, d, k = struct.unpack_from(
        "<4sIIIIIIII", buf, 0
    )
    assert magic == MAGIC == b"WCS1"
    assert version == FORMAT_VERSION == 1
    assert kind == 1
    assert (width, height, channels, scale) == (0, 0, 0, 0)  # raw vectors
    assert d == 20
    assert k == model.whitening.retained_rank

    n, m = struct.unpack_from("<II", buf, 36)
    assert (n, m) == model.train_counts

    # float sections are little-endian f64 in documented order
    offset = 44
    grand = np.frombuffer(buf, dtype="<f8", count=d, offset=offset)
    assert np.array_equal(grand, model.grand_mean)
    offset += 8 * d * 3  # skip the two class means
    eigenvalues = np.frombuffer(buf, dtype="<f8", count=k, offset=offset)
    assert np.array_equal(eigenvalues, model.whitening.eigenvalues)
    offset += 8 * k
    w = np.frombuffer(buf, dtype="<f8", count=d * k, offset=offset).reshape((d, k), order="F")
    assert np.array_equal(w, model.whitening.w)
    assert offset + 8 * d * k == len(buf)


def test_bad_magic_rejected(tmp_path, synthetic_training):
    xn, xr, _ = synthetic_training
    model = train_whitened_cosine(xn, xr)
    path = tmp_path / "model.wcs"
    save_model(model, path)
    data = bytearray(path.read_bytes())
    data[:4] = b"NOPE"
    path.write_bytes(bytes(data))
    with pytest.raises(ModelFormatError, match="bad magic"):
        load_model(path)


def test_unknown_version_rejected(tmp_path, synthetic_training):
    xn, xr, _ = synthetic_training
    save_model(train_whitened_cosine(xn, xr), tmp_path / "m.wcs")
    data = bytearray((tmp_path / "m.wcs").read_bytes())
    struct.pack_into("<I", data, 4, 99)
    (tmp_path / "m.wcs").write_bytes(bytes(data))
    with pytest.raises(ModelFormatError, match="version 99"):
        load_model(tmp_path / "m.wcs")


def test_truncated_and_trailing_bytes_rejected(tmp_path, synthetic_training):
    xn, xr, _ = synthetic_training
    path = tmp_path / "m.wcs"
    save_model(train_whitened_cosine(xn, xr), path)
    buf = path.read_bytes()

    path.write_bytes(buf[: len(buf) // 2])
    with pytest.raises(ModelFormatError, match="truncated"):
        load_model(path)

    path.write_bytes(buf + b"\x00" * 8)
    with pytest.raises(ModelFormatError, match="trailing"):
        load_model(path)

    path.write_bytes(buf[:10])
    with pytest.raises(ModelFormatError, match="too short"):
        load_model(path)


def test_invalid_label_byte_rejected(tmp_path, synthetic_training):
    xn, xr, labels = synthetic_training
    pooled = np.concatenate([xn, xr], axis=1)
    path = tmp_path / "knn.wcs"
    save_model(train_knn(pooled, labels, k=1), path)
    data = bytearray(path.read_bytes())
    data[36 + 12] = 7  # first label byte lives after header + three u32 counts
    path.write_bytes(bytes(data))
    with pytest.raises(ModelFormatError, match="invalid label byte"):
        load_model(path)
