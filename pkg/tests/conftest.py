import numpy as np
import pytest


def natural_images(n: int, size: int, seed: int = 0) -> np.ndarray:
    """Synthetic natural-looking images: 1/f-filtered noise, shape (n, 1, s, s)."""
    rng = np.random.default_rng(seed)
    freq = np.fft.fftfreq(size)
    radius = np.sqrt(freq[:, None] ** 2 + freq[None, :] ** 2)
    spectrum = 1.0 / (0.01 + radius) ** 1.5
    imgs = []
    for _ in range(n):
        noise = rng.standard_normal((size, size))
        img = np.real(np.fft.ifft2(np.fft.fft2(noise) * spectrum))
        lo, hi = img.min(), img.max()
        imgs.append((img - lo) / (hi - lo))
    return np.asarray(imgs)[:, None]


def write_cifar_batch(path, pixels: np.ndarray, labels=None) -> None:
    """Write records in the CIFAR-10 binary layout (label + 3x1024 planar bytes)."""
    n = pixels.shape[0]
    assert pixels.shape == (n, 3, 32, 32) and pixels.dtype == np.uint8
    labels = labels if labels is not None else np.zeros(n, np.uint8)
    with open(path, "wb") as f:
        for i in range(n):
            f.write(bytes([labels[i]]))
            f.write(pixels[i].tobytes())


@pytest.fixture
def rng():
    return np.random.default_rng(0)
