"""Binary model persistence.

All models share one container so baselines travel exactly like the primary
detector. Every multi-byte value is little-endian regardless of platform;
float arrays are 64-bit and matrices are stored column by column.

Layout (u32 = unsigned 32-bit little-endian, f64 = little-endian double):

    magic           4 bytes, b"WCS1"
    version         u32 (currently 1)
    kind            u32: 1 whitened-cosine, 2 knn, 3 pca-pipeline
    width           u32 \
    height          u32  | preprocessing spec; all zero means raw vectors
    channels        u32  | (no image decoding)
    pixel_scale     u32 /  0 raw, 1 unit
    d               u32 feature dimension
    k               u32 retained rank / component count (0 for knn)

    kind 1: n u32, m u32,
            f64 grand_mean[d], mean_normal[d], mean_rosacea[d],
            eigenvalues[k], whitening[d*k] column-major
    kind 2: knn_k u32, metric u32 (0 l1, 1 l2, 2 cosine), count u32,
            labels u8[count] (0 normal, 1 rosacea),
            f64 training_columns[d*count] column-major
    kind 3: head u32 (0 nearest-mean, 1 knn-l2); then for knn-l2:
            knn_k u32, count u32, labels u8[count],
            f64 grand_mean[d], projection[d*k] column-major,
            projected_columns[k*count] column-major
            and for nearest-mean:
            f64 grand_mean[d], projection[d*k] column-major,
            mean_normal[k], mean_rosacea[k]
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .classifiers import (
    AnyModel,
    KnnModel,
    NearestMeanHead,
    PcaPipelineModel,
    WhitenedCosineModel,
)
from .dataset import NORMAL, ROSACEA, PreprocessSpec
from .linalg import WhiteningMatrix

__all__ = ["ModelFormatError", "save_model", "load_model", "MAGIC", "FORMAT_VERSION"]

MAGIC = b"WCS1"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sIIIIIIII")

_KIND_WCS, _KIND_KNN, _KIND_PCA = 1, 2, 3
_SCALES = ("raw", "unit")
_METRICS = ("l1", "l2", "cosine")
_LABELS = (NORMAL, ROSACEA)
_HEAD_MEAN, _HEAD_KNN = 0, 1


class ModelFormatError(ValueError):
    """The file is not a readable model of a known version."""


def _f64(a: np.ndarray) -> bytes:
    return np.ascontiguousarray(a, dtype="<f8").tobytes()


def _f64_colmajor(a: np.ndarray) -> bytes:
    return np.asarray(a, dtype="<f8").flatten(order="F").tobytes()


def save_model(model: AnyModel, path) -> None:
    """Write any trained model to ``path`` in the container format above."""
    prep = model.preprocess
    scale = _SCALES.index(prep.pixel_scale)
    chunks = []
    if isinstance(model, WhitenedCosineModel):
        d = model.dimension
        k = model.whitening.retained_rank
        n, m = model.train_counts
        chunks.append(
            _HEADER.pack(MAGIC, FORMAT_VERSION, _KIND_WCS, prep.width, prep.height,
                         prep.channels, scale, d, k)
        )
        chunks.append(struct.pack("<II", n, m))
        chunks.append(_f64(model.grand_mean))
        chunks.append(_f64(model.mean_normal))
        chunks.append(_f64(model.mean_rosacea))
        chunks.append(_f64(model.whitening.eigenvalues))
        chunks.append(_f64_colmajor(model.whitening.w))
    elif isinstance(model, KnnModel):
        d = model.dimension
        count = model.training_columns.shape[1]
        chunks.append(
            _HEADER.pack(MAGIC, FORMAT_VERSION, _KIND_KNN, prep.width, prep.height,
                         prep.channels, scale, d, 0)
        )
        chunks.append(struct.pack("<III", model.k, _METRICS.index(model.metric), count))
        chunks.append(bytes(_LABELS.index(lab) for lab in model.labels))
        chunks.append(_f64_colmajor(model.training_columns))
    elif isinstance(model, PcaPipelineModel):
        d = model.dimension
        k = model.n_components
        chunks.append(
            _HEADER.pack(MAGIC, FORMAT_VERSION, _KIND_PCA, prep.width, prep.height,
                         prep.channels, scale, d, k)
        )
        if isinstance(model.inner, KnnModel):
            count = model.inner.training_columns.shape[1]
            chunks.append(struct.pack("<I", _HEAD_KNN))
            chunks.append(struct.pack("<II", model.inner.k, count))
            chunks.append(bytes(_LABELS.index(lab) for lab in model.inner.labels))
            chunks.append(_f64(model.grand_mean))
            chunks.append(_f64_colmajor(model.projection))
            chunks.append(_f64_colmajor(model.inner.training_columns))
        else:
            chunks.append(struct.pack("<I", _HEAD_MEAN))
            chunks.append(_f64(model.grand_mean))
            chunks.append(_f64_colmajor(model.projection))
            chunks.append(_f64(model.inner.mean_normal))
            chunks.append(_f64(model.inner.mean_rosacea))
    else:
        raise TypeError(f"not a model: {type(model).__name__}")
    Path(path).write_bytes(b"".join(chunks))


class _Reader:
    def __init__(self, buf: bytes, path):
        self.buf = buf
        self.pos = 0
        self.path = path

    def take(self, size: int) -> bytes:
        if self.pos + size > len(self.buf):
            raise ModelFormatError(f"{self.path}: truncated model file")
        out = self.buf[self.pos : self.pos + size]
        self.pos += size
        return out

    def u32(self, count: int = 1):
        vals = struct.unpack(f"<{count}I", self.take(4 * count))
        return vals[0] if count == 1 else vals

    def f64_vector(self, size: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * size), dtype="<f8").astype(np.float64)

    def f64_colmajor(self, rows: int, cols: int) -> np.ndarray:
        flat = np.frombuffer(self.take(8 * rows * cols), dtype="<f8")
        # canonical C layout so loaded models hit the same BLAS paths
        # (and produce bit-identical scores) as freshly trained ones
        return np.ascontiguousarray(flat.reshape((rows, cols), order="F"), dtype=np.float64)

    def labels(self, count: int) -> tuple:
        raw = self.take(count)
        try:
            return tuple(_LABELS[b] for b in raw)
        except IndexError:
            raise ModelFormatError(f"{self.path}: invalid label byte") from None

    def done(self):
        if self.pos != len(self.buf):
            raise ModelFormatError(
                f"{self.path}: {len(self.buf) - self.pos} unexpected trailing bytes"
            )


def load_model(path) -> AnyModel:
    """Read a model written by :func:`save_model`."""
    path = Path(path)
    buf = path.read_bytes()
    if len(buf) < _HEADER.size:
        raise ModelFormatError(f"{path}: too short to be a model file")
    r = _Reader(buf, path)
    magic, version, kind, width, height, channels, scale, d, k = _HEADER.unpack(
        r.take(_HEADER.size)
    )
    if magic != MAGIC:
        raise ModelFormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported format version {version} (reader understands {FORMAT_VERSION})"
        )
    if scale >= len(_SCALES):
        raise ModelFormatError(f"{path}: unknown pixel-scale code {scale}")
    try:
        prep = PreprocessSpec(width, height, channels, _SCALES[scale])
    except ValueError as exc:
        raise ModelFormatError(f"{path}: invalid preprocessing spec: {exc}") from exc

    if kind == _KIND_WCS:
        n, m = r.u32(2)
        grand_mean = r.f64_vector(d)
        mean_normal = r.f64_vector(d)
        mean_rosacea = r.f64_vector(d)
        eigenvalues = r.f64_vector(k)
        w = r.f64_colmajor(d, k)
        r.done()
        return WhitenedCosineModel(
            grand_mean=grand_mean,
            mean_normal=mean_normal,
            mean_rosacea=mean_rosacea,
            whitening=WhiteningMatrix(w, eigenvalues),
            preprocess=prep,
            train_counts=(n, m),
        )
    if kind == _KIND_KNN:
        knn_k, metric, count = r.u32(3)
        if metric >= len(_METRICS):
            raise ModelFormatError(f"{path}: unknown metric code {metric}")
        labels = r.labels(count)
        columns = r.f64_colmajor(d, count)
        r.done()
        return KnnModel(columns, labels, knn_k, _METRICS[metric], prep)
    if kind == _KIND_PCA:
        head = r.u32()
        if head == _HEAD_KNN:
            knn_k, count = r.u32(2)
            labels = r.labels(count)
            grand_mean = r.f64_vector(d)
            projection = r.f64_colmajor(d, k)
            projected = r.f64_colmajor(k, count)
            r.done()
            inner: KnnModel | NearestMeanHead = KnnModel(projected, labels, knn_k, "l2")
        elif head == _HEAD_MEAN:
            grand_mean = r.f64_vector(d)
            projection = r.f64_colmajor(d, k)
            mean_normal = r.f64_vector(k)
            mean_rosacea = r.f64_vector(k)
            r.done()
            inner = NearestMeanHead(mean_normal, mean_rosacea)
        else:
            raise ModelFormatError(f"{path}: unknown pipeline head code {head}")
        return PcaPipelineModel(projection, grand_mean, inner, prep)
    raise ModelFormatError(f"{path}: unknown model kind {kind}")
