"""PSNR, SSIM, image fusion, and split evaluation reports.

Images are expected in [0, 1] with peak 1.0.  PSNR of identical images is
capped at 99.0 dB so reports stay numeric.  SSIM uses an 11x11 Gaussian
window (sigma 1.5), constants K1=0.01 / K2=0.03, and averages over valid
(fully inside) window positions only.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

PSNR_CAP = 99.0


@dataclass(frozen=True)
class SsimParams:
    window_size: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    peak: float = 1.0


@dataclass(frozen=True)
class FusionConfig:
    fusion_weight: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.fusion_weight <= 1.0:
            raise ValueError("fusion weight must lie in [0, 1]")


def psnr(x: np.ndarray, y: np.ndarray, peak: float = 1.0) -> float:
    if x.shape != y.shape:
        raise ValueError("shape mismatch")
    mse = float(np.mean((np.asarray(x, float) - np.asarray(y, float)) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(10.0 * math.log10(peak * peak / mse), PSNR_CAP)


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    """2-D Gaussian weights normalized to sum exactly 1."""
    r = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(r ** 2) / (2.0 * sigma ** 2))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(x: np.ndarray, y: np.ndarray, p: SsimParams = SsimParams()) -> float:
    if x.shape != y.shape:
        raise ValueError("shape mismatch")
    if min(x.shape) < p.window_size:
        raise ValueError(f"image smaller than the {p.window_size}x{p.window_size} window")
    x = np.asarray(x, np.float64)
    y = np.asarray(y, np.float64)
    w = gaussian_window(p.window_size, p.sigma)
    wx = sliding_window_view(x, (p.window_size, p.window_size))
    wy = sliding_window_view(y, (p.window_size, p.window_size))
    mx = np.einsum("hwij,ij->hw", wx, w, optimize=True)
    my = np.einsum("hwij,ij->hw", wy, w, optimize=True)
    mxx = np.einsum("hwij,ij->hw", wx * wx, w, optimize=True)
    myy = np.einsum("hwij,ij->hw", wy * wy, w, optimize=True)
    mxy = np.einsum("hwij,ij->hw", wx * wy, w, optimize=True)
    vx = mxx - mx * mx
    vy = myy - my * my
    cov = mxy - mx * my
    c1 = (p.k1 * p.peak) ** 2
    c2 = (p.k2 * p.peak) ** 2
    num = (2 * mx * my + c1) * (2 * cov + c2)
    den = (mx * mx + my * my + c1) * (vx + vy + c2)
    return float(np.mean(num / den))


def fuse(x1: np.ndarray, x2: np.ndarray, cfg: FusionConfig = FusionConfig()) -> np.ndarray:
    """Convex pixelwise blend lam*x1 + (1-lam)*x2."""
    if x1.shape != x2.shape:
        raise ValueError("shape mismatch")
    lam = cfg.fusion_weight
    return lam * np.asarray(x1, float) + (1.0 - lam) * np.asarray(x2, float)


@dataclass
class EvalReport:
    """Per-image PSNR/SSIM plus aggregate means, serializable to CSV."""

    psnr_values: list = field(default_factory=list)
    ssim_values: list = field(default_factory=list)

    @property
    def mean_psnr(self) -> float:
        return float(np.mean(self.psnr_values))

    @property
    def mean_ssim(self) -> float:
        return float(np.mean(self.ssim_values))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["index", "psnr_db", "ssim"])
            for i, (a, b) in enumerate(zip(self.psnr_values, self.ssim_values)):
                w.writerow([i, repr(a), repr(b)])
            w.writerow(["mean", repr(self.mean_psnr), repr(self.mean_ssim)])


def evaluate_split(images: np.ndarray, generated: np.ndarray) -> EvalReport:
    """Per-image metrics over an aligned (N, 1, H, W) or (N, H, W) split."""
    if images.shape != generated.shape:
        raise ValueError("image count / shape mismatch")
    images = images.reshape(images.shape[0], images.shape[-2], images.shape[-1])
    generated = generated.reshape(images.shape)
    report = EvalReport()
    for img, gen in zip(images, generated):
        report.psnr_values.append(psnr(img, gen))
        report.ssim_values.append(ssim(img, gen))
    return report
