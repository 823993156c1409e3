"""Dataset ingestion: CIFAR-10 binary batches and image directories.

All loaders emit float32 tensors of shape (N, 1, H, W) with values in
[0, 1], grayscaled with BT.601 luma weights, and deterministic seeded
train/test subset selection.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .tensorio import SeededRng

GRAY_WEIGHTS = (0.299, 0.587, 0.114)

CIFAR_TRAIN_FILES = [f"data_batch_{i}.bin" for i in range(1, 6)]
CIFAR_TEST_FILE = "test_batch.bin"
CIFAR_RECORD = 3073  # 1 label byte + 3 * 1024 channel-planar pixel bytes


@dataclass
class DatasetSpec:
    source: str  # "cifar10_binary_dir" or "image_dir"
    train_n: int
    test_n: int
    height: int = 32
    width: int = 32
    seed: int = 0


def to_grayscale(rgb: np.ndarray) -> np.ndarray:
    """BT.601 luma: 0.299 R + 0.587 G + 0.114 B.  Channels on axis 0."""
    if rgb.shape[0] != 3:
        raise ValueError(f"expected 3 channels, got {rgb.shape[0]}")
    r, g, b = GRAY_WEIGHTS
    return r * rgb[0] + g * rgb[1] + b * rgb[2]


def _decode_cifar_file(path) -> np.ndarray:
    with open(path, "rb") as f:
        raw = np.frombuffer(f.read(), dtype=np.uint8)
    if raw.size == 0 or raw.size % CIFAR_RECORD != 0:
        raise ValueError(f"{path}: size {raw.size} is not a multiple of {CIFAR_RECORD}")
    records = raw.reshape(-1, CIFAR_RECORD)
    pixels = records[:, 1:].reshape(-1, 3, 32, 32).astype(np.float64) / 255.0
    gray = np.einsum("c,nchw->nhw", np.array(GRAY_WEIGHTS), pixels)
    return gray[:, None].astype(np.float32)


def load_cifar10(directory, spec: DatasetSpec) -> tuple[np.ndarray, np.ndarray]:
    """Decode the standard 5 train + 1 test binary batch files."""
    train_parts = []
    for name in CIFAR_TRAIN_FILES:
        path = os.path.join(directory, name)
        if not os.path.exists(path):
            raise FileNotFoundError(path)
        train_parts.append(_decode_cifar_file(path))
    train_all = np.concatenate(train_parts)
    test_all = _decode_cifar_file(os.path.join(directory, CIFAR_TEST_FILE))
    rng = SeededRng(spec.seed)
    train_idx = rng.permutation(train_all.shape[0])[: spec.train_n]
    test_idx = rng.permutation(test_all.shape[0])[: spec.test_n]
    return train_all[np.sort(train_idx)], test_all[np.sort(test_idx)]


def _load_one_image(path, height: int, width: int) -> np.ndarray:
    img = Image.open(path)
    if img.mode not in ("L", "RGB"):
        img = img.convert("RGB")
    # center-crop to the largest centered square
    w, h = img.size
    side = min(w, h)
    left = (w - side) // 2
    top = (h - side) // 2
    if (w, h) != (side, side):
        img = img.crop((left, top, left + side, top + side))
    if img.size != (width, height):
        img = img.resize((width, height), Image.BILINEAR)
    arr = np.asarray(img, dtype=np.float64) / 255.0
    if img.mode == "L":
        return arr
    return to_grayscale(arr.transpose(2, 0, 1))


def load_image_dir(directory, spec: DatasetSpec, log=None) -> tuple[np.ndarray, np.ndarray]:
    """Load a directory of PNG/JPEG images (lexicographic order, seeded split)."""
    names = sorted(
        n for n in os.listdir(directory)
        if n.lower().endswith((".png", ".jpg", ".jpeg"))
    )
    images, skipped = [], 0
    for name in names:
        try:
            images.append(_load_one_image(os.path.join(directory, name), spec.height, spec.width))
        except OSError as exc:
            skipped += 1
            if log:
                log(f"skipping unreadable file {name}: {exc}")
    if log and skipped:
        log(f"skipped {skipped} unreadable files")
    stack = np.asarray(images, dtype=np.float32)[:, None]
    rng = SeededRng(spec.seed)
    order = rng.permutation(stack.shape[0])
    train_idx = np.sort(order[: spec.train_n])
    test_idx = np.sort(order[spec.train_n: spec.train_n + spec.test_n])
    return stack[train_idx], stack[test_idx]


def load_dataset(directory, spec: DatasetSpec, log=None):
    if spec.source == "cifar10_binary_dir":
        return load_cifar10(directory, spec)
    if spec.source == "image_dir":
        return load_image_dir(directory, spec, log=log)
    raise ValueError(f"unknown dataset source {spec.source!r}")
