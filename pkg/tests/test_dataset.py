import numpy as np
import pytest
from PIL import Image

from wcosim.dataset import (
    NORMAL,
    RAW_VECTORS,
    ROSACEA,
    DatasetManifest,
    PreprocessSpec,
    SyntheticSpec,
    generate_synthetic,
    load_csv_vectors,
    load_image_vector,
    load_vectors,
    scan_directories,
    split,
)


def write_png(path, pixels):
    Image.fromarray(np.asarray(pixels, dtype=np.uint8), "RGB").save(path)


def solid_png(path, size, value):
    write_png(path, np.full((size, size, 3), value, dtype=np.uint8))


# ------------------------------------------------------------ preprocess spec


def test_preprocess_spec_validation():
    with pytest.raises(ValueError):
        PreprocessSpec(0, 16, 3)
    with pytest.raises(ValueError):
        PreprocessSpec(16, 16, 4)
    with pytest.raises(ValueError):
        PreprocessSpec(16, 16, 3, "half")
    assert PreprocessSpec(16, 16, 3).dimension == 768
    assert not RAW_VECTORS.is_image
    assert RAW_VECTORS.dimension is None


# ------------------------------------------------------------ image loading


def test_load_all_white_2x2(tmp_path):
    path = tmp_path / "white.png"
    solid_png(path, 2, 255)
    vec = load_image_vector(path, PreprocessSpec(2, 2, 3, "unit"))
    assert vec.shape == (12,)
    assert np.array_equal(vec, np.ones(12))


def test_load_all_black_2x2(tmp_path):
    path = tmp_path / "black.png"
    solid_png(path, 2, 0)
    vec = load_image_vector(path, PreprocessSpec(2, 2, 3, "unit"))
    assert np.array_equal(vec, np.zeros(12))


def test_load_raw_scale(tmp_path):
    path = tmp_path / "white.png"
    solid_png(path, 2, 255)
    vec = load_image_vector(path, PreprocessSpec(2, 2, 3, "raw"))
    assert np.array_equal(vec, np.full(12, 255.0))


def test_checkerboard_bilinear_downsize(tmp_path):
    board = np.zeros((4, 4, 3), dtype=np.uint8)
    board[::2, 1::2] = 255
    board[1::2, ::2] = 255
    path = tmp_path / "board.png"
    write_png(path, board)
    vec = load_image_vector(path, PreprocessSpec(2, 2, 3, "unit"))
    # every 2x2 output pixel averages equal black and white mass
    assert np.abs(vec - 0.5).max() <= 1.0 / 255.0


def test_grayscale_replicated_to_three_channels(tmp_path):
    path = tmp_path / "gray.png"
    Image.fromarray(np.full((2, 2), 77, dtype=np.uint8), "L").save(path)
    vec = load_image_vector(path, PreprocessSpec(2, 2, 3, "raw"))
    assert vec.shape == (12,)
    assert np.array_equal(vec, np.full(12, 77.0))


def test_load_is_deterministic(tmp_path):
    rng = np.random.default_rng(41)
    path = tmp_path / "noise.png"
    write_png(path, rng.integers(0, 255, size=(9, 9, 3)))
    spec = PreprocessSpec(8, 8, 3, "unit")
    assert np.array_equal(load_image_vector(path, spec), load_image_vector(path, spec))


def test_load_errors(tmp_path):
    spec = PreprocessSpec(8, 8, 3)
    with pytest.raises(ValueError, match="no such file"):
        load_image_vector(tmp_path / "missing.png", spec)
    junk = tmp_path / "junk.png"
    junk.write_bytes(b"this is not an image")
    with pytest.raises(ValueError, match="unreadable or corrupt"):
        load_image_vector(junk, spec)
    bmp = tmp_path / "disguised.png"
    Image.fromarray(np.zeros((4, 4, 3), dtype=np.uint8), "RGB").save(bmp, format="BMP")
    with pytest.raises(ValueError, match="unsupported image format"):
        load_image_vector(bmp, spec)
    with pytest.raises(ValueError, match="raw vectors"):
        load_image_vector(junk, RAW_VECTORS)


# ------------------------------------------------------------------ scanning


def make_class_dirs(tmp_path, n_normal, n_rosacea, size=8):
    d_n = tmp_path / "normal"
    d_r = tmp_path / "rosacea"
    d_n.mkdir()
    d_r.mkdir()
    for i in range(n_normal):
        solid_png(d_n / f"n_{i}.png", size, 30 + i)
    for i in range(n_rosacea):
        solid_png(d_r / f"r_{i}.png", size, 200 - i)
    return d_n, d_r


def test_scan_directories_sorted(tmp_path):
    d_n, d_r = make_class_dirs(tmp_path, 3, 2)
    manifest = scan_directories(d_n, d_r)
    assert len(manifest) == 5
    paths = [str(p) for p, _ in manifest.entries]
    assert paths == sorted(paths)
    assert sorted(lab for _, lab in manifest.entries) == [NORMAL] * 3 + [ROSACEA] * 2


def test_scan_skips_non_images_with_warning(tmp_path):
    d_n, d_r = make_class_dirs(tmp_path, 2, 2)
    (d_n / "notes.txt").write_text("hello")
    with pytest.warns(UserWarning, match="skipping"):
        manifest = scan_directories(d_n, d_r)
    assert len(manifest) == 4


def test_scan_empty_class_errors(tmp_path):
    d_n = tmp_path / "normal"
    d_r = tmp_path / "rosacea"
    d_n.mkdir()
    d_r.mkdir()
    solid_png(d_n / "a.png", 8, 10)
    with pytest.raises(ValueError, match="no images found"):
        scan_directories(d_n, d_r)
    with pytest.raises(ValueError, match="not a directory"):
        scan_directories(d_n, tmp_path / "absent")


def test_scan_duplicate_filenames_both_kept(tmp_path):
    d_n, d_r = make_class_dirs(tmp_path, 1, 1)
    solid_png(d_n / "same.png", 8, 1)
    solid_png(d_r / "same.png", 8, 2)
    manifest = scan_directories(d_n, d_r)
    assert len(manifest) == 4


def test_load_vectors_columns_in_manifest_order(tmp_path):
    d_n, d_r = make_class_dirs(tmp_path, 2, 1)
    manifest = scan_directories(d_n, d_r)
    x, labels = load_vectors(manifest, PreprocessSpec(8, 8, 3, "raw"))
    assert x.shape == (192, 3)
    assert labels == [NORMAL, NORMAL, ROSACEA]
    # solid images: first column all 30s, second all 31s, third all 200s
    assert np.array_equal(x[:, 0], np.full(192, 30.0))
    assert np.array_equal(x[:, 1], np.full(192, 31.0))
    assert np.array_equal(x[:, 2], np.full(192, 200.0))


def test_load_vectors_respects_thread_cap(tmp_path, monkeypatch):
    d_n, d_r = make_class_dirs(tmp_path, 3, 3)
    manifest = scan_directories(d_n, d_r)
    monkeypatch.setenv("WCS_THREADS", "2")
    x, _ = load_vectors(manifest, PreprocessSpec(8, 8, 3))
    assert x.shape == (192, 6)
    monkeypatch.setenv("WCS_THREADS", "zero")
    with pytest.raises(ValueError, match="WCS_THREADS"):
        load_vectors(manifest, PreprocessSpec(8, 8, 3))


# ----------------------------------------------------------------- splitting


def fake_manifest(n_normal, n_rosacea):
    entries = [(f"n/{i:04d}.png", NORMAL) for i in range(n_normal)]
    entries += [(f"r/{i:04d}.png", ROSACEA) for i in range(n_rosacea)]
    return DatasetManifest(tuple(entries))


def test_split_five_sixths_ratios():
    manifest = fake_manifest(600, 300)
    train, val = split(manifest, ratio=5.0 / 6.0, seed=0)
    assert len(train.paths(NORMAL)) == 500
    assert len(val.paths(NORMAL)) == 100
    assert len(train.paths(ROSACEA)) == 250
    assert len(val.paths(ROSACEA)) == 50


def test_split_is_deterministic_and_partitions():
    manifest = fake_manifest(40, 25)
    t1, v1 = split(manifest, 0.8, seed=7)
    t2, v2 = split(manifest, 0.8, seed=7)
    assert t1.entries == t2.entries and v1.entries == v2.entries
    merged = set(t1.entries) | set(v1.entries)
    assert merged == set(manifest.entries)
    assert not (set(t1.entries) & set(v1.entries))
    t3, _ = split(manifest, 0.8, seed=8)
    assert t3.entries != t1.entries  # different seed shuffles differently


def test_split_records_parameters():
    train, val = split(fake_manifest(10, 10), 0.5, seed=3)
    assert train.split_seed == val.split_seed == 3
    assert train.split_ratio == val.split_ratio == 0.5


def test_split_validation():
    with pytest.raises(ValueError, match="ratio"):
        split(fake_manifest(10, 10), 1.0, seed=0)
    with pytest.raises(ValueError, match="too few"):
        split(fake_manifest(1, 10), 0.5, seed=0)


# ----------------------------------------------------------------- synthetic


def test_synthetic_reproducible_and_shaped():
    spec = SyntheticSpec(d=16, n=10, m=7, separation=3.0, sigma=0.5, seed=5)
    xn1, xr1, labels = generate_synthetic(spec)
    xn2, xr2, _ = generate_synthetic(spec)
    assert np.array_equal(xn1, xn2) and np.array_equal(xr1, xr2)
    assert xn1.shape == (16, 10) and xr1.shape == (16, 7)
    assert labels == [NORMAL] * 10 + [ROSACEA] * 7


def test_synthetic_class_mean_geometry():
    spec = SyntheticSpec(d=24, n=400, m=400, separation=6.0, sigma=1.0, seed=6)
    xn, xr, _ = generate_synthetic(spec)
    gap = xr.mean(axis=1) - xn.mean(axis=1)
    # sample means sit near +/- separation/2 along one direction
    assert abs(np.linalg.norm(gap) - 6.0) < 5 * 1.0 / np.sqrt(400) * 2
    center = 0.5 * (xr.mean(axis=1) + xn.mean(axis=1))
    assert np.abs(center).max() < 5 * 1.0 / np.sqrt(400)


def test_synthetic_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(d=1, n=5, m=5, separation=1.0, sigma=1.0)
    with pytest.raises(ValueError):
        SyntheticSpec(d=4, n=5, m=5, separation=1.0, sigma=0.0)
    with pytest.raises(ValueError):
        SyntheticSpec(d=4, n=0, m=5, separation=1.0, sigma=1.0)


# ----------------------------------------------------------------------- csv


def test_csv_round_shape(tmp_path):
    path = tmp_path / "fix.csv"
    path.write_text("normal,1.0,2.0,3.0\nrosacea,4.0,5.0,6.0\n")
    x, labels = load_csv_vectors(path)
    assert x.shape == (3, 2)
    assert labels == [NORMAL, ROSACEA]
    assert np.array_equal(x[:, 1], [4.0, 5.0, 6.0])


def test_csv_empty_errors(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(ValueError, match="empty CSV"):
        load_csv_vectors(path)


def test_csv_header_fails_on_line_1(tmp_path):
    path = tmp_path / "hdr.csv"
    path.write_text("label,x1,x2\nnormal,1.0,2.0\n")
    with pytest.raises(ValueError, match="line 1"):
        load_csv_vectors(path)


def test_csv_ragged_row_names_line(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text("normal,1.0,2.0\nrosacea,3.0\n")
    with pytest.raises(ValueError, match="line 2"):
        load_csv_vectors(path)


def test_csv_non_numeric_cell_names_line_and_value(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("normal,1.0,2.0\nrosacea,3.0,oops\n")
    with pytest.raises(ValueError, match=r"line 2.*'oops'"):
        load_csv_vectors(path)
