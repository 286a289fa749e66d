"""Dataset handling: image ingestion, directory scanning, stratified splits,
CSV vector fixtures, and synthetic two-class data for tests and benchmarks.
"""

from __future__ import annotations

import csv
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .linalg import as_matrix

__all__ = [
    "NORMAL",
    "ROSACEA",
    "LABELS",
    "PreprocessSpec",
    "RAW_VECTORS",
    "DatasetManifest",
    "SyntheticSpec",
    "load_image_vector",
    "scan_directories",
    "split",
    "load_vectors",
    "generate_synthetic",
    "load_csv_vectors",
]

NORMAL = "normal"
ROSACEA = "rosacea"
LABELS = (NORMAL, ROSACEA)

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")

PIXEL_SCALES = ("unit", "raw")  # unit divides by 255, raw keeps 0..255


@dataclass(frozen=True)
class PreprocessSpec:
    """Image ingestion parameters, stored inside every trained model so that
    inference always preprocesses exactly like training did.

    ``width == height == channels == 0`` is the sentinel for models trained on
    raw vectors (CSV fixtures, synthetic data), where no image decoding
    happens at all. Resizing is always bilinear.
    """

    width: int = 512
    height: int = 512
    channels: int = 3
    pixel_scale: str = "unit"

    def __post_init__(self):
        if self.pixel_scale not in PIXEL_SCALES:
            raise ValueError(f"unknown pixel scale {self.pixel_scale!r}")
        if self.is_image:
            if self.width < 1 or self.height < 1:
                raise ValueError("image width and height must be positive")
            if self.channels != 3:
                raise ValueError("only 3-channel images are supported")
        elif (self.width, self.height, self.channels) != (0, 0, 0):
            raise ValueError("raw-vector spec must have width=height=channels=0")

    @property
    def is_image(self) -> bool:
        return self.width != 0 or self.height != 0 or self.channels != 0

    @property
    def dimension(self) -> int | None:
        """Flattened vector length, or None for raw-vector mode."""
        return self.width * self.height * self.channels if self.is_image else None


RAW_VECTORS = PreprocessSpec(0, 0, 0, "raw")


@dataclass(frozen=True)
class DatasetManifest:
    """Labeled file list; split parameters are recorded once a split is made."""

    entries: tuple  # of (Path, label)
    split_seed: int | None = None
    split_ratio: float | None = None

    def __len__(self) -> int:
        return len(self.entries)

    def paths(self, label: str | None = None) -> list[Path]:
        return [p for p, lab in self.entries if label is None or lab == label]


@dataclass(frozen=True)
class SyntheticSpec:
    """Two isotropic Gaussian clouds a fixed distance apart, for desk-scale tests."""

    d: int
    n: int
    m: int
    separation: float
    sigma: float
    seed: int = 0

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must be at least 2")
        if self.n < 1 or self.m < 1:
            raise ValueError("both classes need at least one sample")
        if self.sigma <= 0.0:
            raise ValueError("sigma must be positive")
        if self.separation < 0.0:
            raise ValueError("separation must be non-negative")


def _bilinear_resize(arr: np.ndarray, width: int, height: int) -> np.ndarray:
    """Classic 4-tap bilinear interpolation at output pixel centers.

    Deliberately not an antialiasing filter: each output sample blends the
    four input pixels around its mapped center with edge clamping, which keeps
    fixtures hand-computable and bit-stable across platforms.
    """
    in_h, in_w = arr.shape[:2]
    xs = (np.arange(width) + 0.5) * (in_w / width) - 0.5
    ys = (np.arange(height) + 0.5) * (in_h / height) - 0.5
    x0f = np.floor(xs)
    y0f = np.floor(ys)
    wx = (xs - x0f)[None, :, None]
    wy = (ys - y0f)[:, None, None]
    x0 = np.clip(x0f.astype(int), 0, in_w - 1)
    x1 = np.clip(x0f.astype(int) + 1, 0, in_w - 1)
    y0 = np.clip(y0f.astype(int), 0, in_h - 1)
    y1 = np.clip(y0f.astype(int) + 1, 0, in_h - 1)
    top = arr[y0][:, x0] * (1.0 - wx) + arr[y0][:, x1] * wx
    bottom = arr[y1][:, x0] * (1.0 - wx) + arr[y1][:, x1] * wx
    return top * (1.0 - wy) + bottom * wy


def load_image_vector(path, spec: PreprocessSpec) -> np.ndarray:
    """Decode an image and flatten it to a float vector.

    PNG and JPEG only. The image is converted to RGB (grayscale is replicated
    across channels), resized with :func:`_bilinear_resize` when its size
    differs from ``spec``, and flattened row-major with interleaved channels.
    Pixel values are scaled to [0, 1] under the ``unit`` policy, or kept as
    0..255 under ``raw``.
    """
    if not spec.is_image:
        raise ValueError("model was trained on raw vectors; cannot ingest image files")
    path = Path(path)
    try:
        with Image.open(path) as img:
            if img.format not in ("PNG", "JPEG"):
                raise ValueError(f"unsupported image format {img.format!r}: {path}")
            rgb = img.convert("RGB")
    except FileNotFoundError:
        raise ValueError(f"no such file: {path}") from None
    except UnidentifiedImageError:
        raise ValueError(f"unreadable or corrupt image: {path}") from None
    except OSError as exc:
        raise ValueError(f"cannot read image {path}: {exc}") from exc

    arr = np.asarray(rgb, dtype=np.float64)
    if rgb.size != (spec.width, spec.height):
        arr = _bilinear_resize(arr, spec.width, spec.height)
    vec = arr.reshape(-1)
    if spec.pixel_scale == "unit":
        vec /= 255.0
    return vec


def scan_directories(normal_dir, rosacea_dir) -> DatasetManifest:
    """Collect image files from one directory per class.

    Entries are sorted lexicographically by path; non-image files are skipped
    with a warning. An empty class is an error.
    """
    entries = []
    for directory, label in ((normal_dir, NORMAL), (rosacea_dir, ROSACEA)):
        directory = Path(directory)
        if not directory.is_dir():
            raise ValueError(f"not a directory: {directory}")
        found = 0
        for item in sorted(directory.iterdir()):
            if not item.is_file():
                continue
            if item.suffix.lower() not in IMAGE_EXTENSIONS:
                warnings.warn(f"skipping non-image file {item}", stacklevel=2)
                continue
            entries.append((item, label))
            found += 1
        if found == 0:
            raise ValueError(f"no images found for class {label!r} in {directory}")
    entries.sort(key=lambda e: str(e[0]))
    return DatasetManifest(tuple(entries))


def split(manifest: DatasetManifest, ratio: float, seed: int):
    """Deterministic per-class (stratified) train/validation split.

    Each class is shuffled with the seeded generator and cut at
    ``round(ratio * class_size)``, so class proportions carry over to both
    sides. Ratio 5/6 on class sizes 300 and 600 gives 250/50 and 500/100.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError("split ratio must be strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    train_entries: list = []
    val_entries: list = []
    for label in LABELS:
        cls = [e for e in manifest.entries if e[1] == label]
        if not cls:
            continue
        if len(cls) < 2:
            raise ValueError(f"class {label!r} has too few samples to split")
        n_train = int(round(ratio * len(cls)))
        n_train = min(max(n_train, 1), len(cls) - 1)
        perm = rng.permutation(len(cls))
        train_entries.extend(cls[i] for i in sorted(perm[:n_train]))
        val_entries.extend(cls[i] for i in sorted(perm[n_train:]))
    return (
        DatasetManifest(tuple(train_entries), split_seed=seed, split_ratio=ratio),
        DatasetManifest(tuple(val_entries), split_seed=seed, split_ratio=ratio),
    )


def _max_workers(n_files: int) -> int:
    env = os.environ.get("WCS_THREADS")
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ValueError(f"WCS_THREADS must be an integer, got {env!r}") from None
        if cap < 1:
            raise ValueError("WCS_THREADS must be at least 1")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_files))


def load_vectors(manifest: DatasetManifest, spec: PreprocessSpec):
    """Load every manifest entry into a d x N matrix (columns in entry order).

    Files are decoded in a small thread pool (image decoding releases the
    GIL); WCS_THREADS caps the worker count. Output order is independent of
    completion order.
    """
    if len(manifest) == 0:
        raise ValueError("empty manifest")
    paths = [p for p, _ in manifest.entries]
    labels = [lab for _, lab in manifest.entries]
    workers = _max_workers(len(paths))
    if workers == 1:
        columns = [load_image_vector(p, spec) for p in paths]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            columns = list(pool.map(lambda p: load_image_vector(p, spec), paths))
    return np.column_stack(columns), labels


def generate_synthetic(spec: SyntheticSpec):
    """Sample the two Gaussian clouds described by ``spec``.

    The class centers sit at +/- separation/2 along a random unit direction,
    symmetric about the origin, so neither class mean degenerates to the zero
    vector. Reproducible for a fixed seed.

    Returns ``(x_normal, x_rosacea, labels)`` with columns as samples.
    """
    rng = np.random.default_rng(spec.seed)
    direction = rng.standard_normal(spec.d)
    direction /= np.linalg.norm(direction)
    offset = 0.5 * spec.separation * direction
    x_normal = -offset[:, None] + spec.sigma * rng.standard_normal((spec.d, spec.n))
    x_rosacea = offset[:, None] + spec.sigma * rng.standard_normal((spec.d, spec.m))
    labels = [NORMAL] * spec.n + [ROSACEA] * spec.m
    return x_normal, x_rosacea, labels


def load_csv_vectors(path):
    """Read a labeled vector fixture: one ``label,v1,...,vd`` row per sample.

    Returns a d x N matrix with columns in file order plus the label list.
    Ragged rows, non-numeric cells, and unknown labels are errors naming the
    offending line; a header row therefore fails on line 1.
    """
    path = Path(path)
    columns: list[np.ndarray] = []
    labels: list[str] = []
    d = None
    with open(path, newline="") as handle:
        for lineno, row in enumerate(csv.reader(handle), start=1):
            if not row:
                continue
            label = row[0].strip()
            if label not in LABELS:
                raise ValueError(
                    f"{path}: line {lineno}: unknown label {label!r} (expected one of {LABELS})"
                )
            if len(row) < 2:
                raise ValueError(f"{path}: line {lineno}: row has no vector values")
            try:
                values = np.array([float(cell) for cell in row[1:]], dtype=np.float64)
            except ValueError:
                bad = next(c for c in row[1:] if not _is_float(c))
                raise ValueError(
                    f"{path}: line {lineno}: non-numeric value {bad.strip()!r}"
                ) from None
            if d is None:
                d = values.size
            elif values.size != d:
                raise ValueError(
                    f"{path}: line {lineno}: expected {d} values, got {values.size}"
                )
            columns.append(values)
            labels.append(label)
    if not columns:
        raise ValueError(f"{path}: empty CSV file")
    return as_matrix(np.column_stack(columns)), labels


def _is_float(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False
