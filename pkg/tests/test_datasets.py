import numpy as np
import pytest
from PIL import Image

from frscatter.datasets import (
    CIFAR_RECORD,
    DatasetSpec,
    load_cifar10,
    load_dataset,
    load_image_dir,
    to_grayscale,
)
from tests.conftest import write_cifar_batch


def test_grayscale_equal_channels(rng):
    v = rng.random((32, 32))
    gray = to_grayscale(np.stack([v, v, v]))
    assert np.allclose(gray, v, atol=1e-15)


def test_grayscale_primaries():
    red = np.zeros((3, 2, 2))
    red[0] = 1.0
    assert np.allclose(to_grayscale(red), 0.299)
    green = np.zeros((3, 2, 2))
    green[1] = 1.0
    assert np.allclose(to_grayscale(green), 0.587)


def test_grayscale_flat_loop_oracle(rng):
    rgb = rng.random((3, 4, 4))
    gray = to_grayscale(rgb)
    for i in range(4):
        for j in range(4):
            want = 0.299 * rgb[0, i, j] + 0.587 * rgb[1, i, j] + 0.114 * rgb[2, i, j]
            assert abs(gray[i, j] - want) < 1e-15


def test_grayscale_rejects_wrong_channel_count():
    with pytest.raises(ValueError):
        to_grayscale(np.zeros((4, 2, 2)))


# ---------------------------------------------------------------- CIFAR


def make_cifar_dir(tmp_path, per_file=20, seed=0):
    rng = np.random.default_rng(seed)
    pixels = {}
    for i, name in enumerate([f"data_batch_{k}.bin" for k in range(1, 6)] + ["test_batch.bin"]):
        data = rng.integers(0, 256, size=(per_file, 3, 32, 32), dtype=np.uint8)
        labels = rng.integers(0, 10, size=per_file, dtype=np.uint8)
        write_cifar_batch(tmp_path / name, data, labels)
        pixels[name] = data
    return pixels


def test_cifar_decoding_matches_bytes(tmp_path):
    pixels = make_cifar_dir(tmp_path, per_file=4)
    spec = DatasetSpec("cifar10_binary_dir", train_n=20, test_n=4, seed=0)
    train, test = load_cifar10(tmp_path, spec)
    assert train.shape == (20, 1, 32, 32) and test.shape == (4, 1, 32, 32)
    assert train.dtype == np.float32 and test.dtype == np.float32
    # first record of data_batch_1 survives (subset is sorted, covers all 20)
    raw = pixels["data_batch_1.bin"][0].astype(np.float64) / 255.0
    want = to_grayscale(raw).astype(np.float32)
    assert np.array_equal(train[0, 0], want)


def test_cifar_subset_deterministic(tmp_path):
    make_cifar_dir(tmp_path, per_file=10)
    spec = DatasetSpec("cifar10_binary_dir", train_n=12, test_n=5, seed=3)
    a = load_cifar10(tmp_path, spec)
    b = load_cifar10(tmp_path, spec)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    c = load_cifar10(tmp_path, DatasetSpec("cifar10_binary_dir", 12, 5, seed=4))
    assert not np.array_equal(a[0], c[0])


def test_cifar_missing_file(tmp_path):
    make_cifar_dir(tmp_path, per_file=2)
    (tmp_path / "data_batch_3.bin").unlink()
    with pytest.raises(FileNotFoundError):
        load_cifar10(tmp_path, DatasetSpec("cifar10_binary_dir", 1, 1))


def test_cifar_truncated_file(tmp_path):
    make_cifar_dir(tmp_path, per_file=2)
    path = tmp_path / "test_batch.bin"
    path.write_bytes(path.read_bytes()[: CIFAR_RECORD + 100])
    with pytest.raises(ValueError):
        load_cifar10(tmp_path, DatasetSpec("cifar10_binary_dir", 1, 1))


def test_cifar_value_range(tmp_path):
    make_cifar_dir(tmp_path, per_file=6)
    train, test = load_cifar10(tmp_path, DatasetSpec("cifar10_binary_dir", 30, 6))
    for split in (train, test):
        assert split.min() >= 0.0 and split.max() <= 1.0


# ---------------------------------------------------------------- image dirs


def write_png(path, arr_u8):
    Image.fromarray(arr_u8, mode="L").save(path)


def test_image_dir_identity_path_exact(tmp_path):
    rng = np.random.default_rng(1)
    vals = []
    for i in range(5):
        a = rng.integers(0, 256, size=(16, 16), dtype=np.uint8)
        write_png(tmp_path / f"img_{i}.png", a)
        vals.append(a)
    spec = DatasetSpec("image_dir", train_n=3, test_n=2, height=16, width=16, seed=0)
    train, test = load_image_dir(tmp_path, spec)
    assert train.shape == (3, 1, 16, 16) and test.shape == (2, 1, 16, 16)
    # grayscale same-size images must come through as exactly p / 255
    everything = np.concatenate([train, test])
    pool = {a.tobytes(): a for a in vals}
    for img in everything:
        u8 = np.round(img[0] * 255).astype(np.uint8)
        assert u8.tobytes() in pool
        want = (pool[u8.tobytes()].astype(np.float64) / 255.0).astype(np.float32)
        assert np.array_equal(img[0], want)


def test_image_dir_center_crop_and_resize(tmp_path):
    # left half black, right half white; crop keeps the center square
    a = np.zeros((40, 60), dtype=np.uint8)
    a[:, 30:] = 255
    write_png(tmp_path / "wide.png", a)
    spec = DatasetSpec("image_dir", train_n=1, test_n=0, height=8, width=8)
    train, _ = load_image_dir(tmp_path, spec)
    img = train[0, 0]
    assert img.shape == (8, 8)
    assert img[:, 0].max() < 0.1 and img[:, -1].min() > 0.9


def test_image_dir_split_disjoint_and_deterministic(tmp_path):
    for i in range(8):
        write_png(tmp_path / f"{i}.png", np.full((8, 8), i * 30, dtype=np.uint8))
    spec = DatasetSpec("image_dir", train_n=5, test_n=3, height=8, width=8, seed=2)
    tr1, te1 = load_image_dir(tmp_path, spec)
    tr2, te2 = load_image_dir(tmp_path, spec)
    assert np.array_equal(tr1, tr2) and np.array_equal(te1, te2)
    train_vals = {img[0, 0, 0] for img in tr1}
    test_vals = {img[0, 0, 0] for img in te1}
    assert not train_vals & test_vals
    assert len(train_vals) == 5 and len(test_vals) == 3


def test_image_dir_skips_unreadable(tmp_path):
    write_png(tmp_path / "good.png", np.zeros((8, 8), dtype=np.uint8))
    (tmp_path / "bad.png").write_bytes(b"not a png")
    logs = []
    spec = DatasetSpec("image_dir", train_n=1, test_n=0, height=8, width=8)
    train, _ = load_image_dir(tmp_path, spec, log=logs.append)
    assert train.shape[0] == 1
    assert any("bad.png" in line for line in logs)


def test_load_dataset_dispatch(tmp_path):
    with pytest.raises(ValueError):
        load_dataset(tmp_path, DatasetSpec("bogus", 1, 1))
    write_png(tmp_path / "a.png", np.zeros((8, 8), dtype=np.uint8))
    train, test = load_dataset(tmp_path, DatasetSpec("image_dir", 1, 0, height=8, width=8))
    assert train.shape == (1, 1, 8, 8) and test.shape[0] == 0
