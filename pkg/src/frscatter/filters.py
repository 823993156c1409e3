"""Frequency-domain 2-D Morlet filter bank.

Band-pass filters are Gaussian bumps centered at frequency xi0 / 2**j in
direction delta = k*pi/L, elongated by ``slant`` perpendicular to the wave
vector, with a corrective Gaussian subtracted so the spatial mean is exactly
zero.  The low-pass is a Gaussian of spatial width sigma0 * 2**(J-1) with
unit DC gain.  All filters are sampled on the FFT frequency grid with
aliases folded in, so spatial-domain periodization is exact to machine
precision.

Band-pass filters are globally rescaled so the Littlewood-Paley sum

    sum_{j,k} |psi_hat_{j,k}(w)|**2 + |phi_hat(w)|**2

never exceeds 1 at any frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_N_ALIAS = 2  # fold frequencies over (2*_N_ALIAS + 1)**2 periods


@dataclass(frozen=True)
class FilterParams:
    """Geometry-independent Morlet bank parameters.

    J      : number of dyadic scales, j = 0..J-1
    L      : number of rotation angles, delta = k*pi/L
    sigma0 : Gaussian envelope width at scale 0, in pixels
    xi0    : center frequency modulus at scale 0, radians/pixel
    slant  : envelope anisotropy ratio (smaller = more directional)
    """

    J: int
    L: int
    sigma0: float = 0.8
    xi0: float = 3.0 * math.pi / 4.0
    slant: float | None = None

    def __post_init__(self):
        if self.J < 1 or self.L < 1:
            raise ValueError("require J >= 1 and L >= 1")
        if self.sigma0 <= 0:
            raise ValueError("sigma0 must be positive")
        if not 0 < self.xi0 < math.pi:
            raise ValueError("xi0 must lie in (0, pi)")
        if self.slant is None:
            object.__setattr__(self, "slant", 4.0 / self.L)
        if self.slant <= 0:
            raise ValueError("slant must be positive")


@dataclass
class FilterBank:
    """Precomputed frequency-domain filters for one image geometry."""

    params: FilterParams
    height: int
    width: int
    psi_hat: dict = field(default_factory=dict)  # (j, k) -> complex128 H x W
    phi_hat: np.ndarray | None = None

    def __iter__(self):
        return iter(sorted(self.psi_hat))


def _freq_grid(height: int, width: int):
    w1 = 2.0 * np.pi * np.fft.fftfreq(height)
    w2 = 2.0 * np.pi * np.fft.fftfreq(width)
    return np.meshgrid(w1, w2, indexing="ij")


def _aliased_gaussian(w1, w2, sigma1, sigma2, theta, center):
    """Sum of rotated anisotropic frequency Gaussians over alias periods.

    sigma1/sigma2 are the *spatial* stds along/across the wave direction;
    the frequency-domain Gaussian has stds 1/sigma1 and 1/sigma2.  ``center``
    is the frequency offset along the wave direction.
    """
    c, s = math.cos(theta), math.sin(theta)
    out = np.zeros_like(w1)
    for m1 in range(-_N_ALIAS, _N_ALIAS + 1):
        for m2 in range(-_N_ALIAS, _N_ALIAS + 1):
            a1 = w1 + 2.0 * np.pi * m1
            a2 = w2 + 2.0 * np.pi * m2
            wp = c * a1 + s * a2 - center  # along wave vector
            wq = -s * a1 + c * a2          # across
            out += np.exp(-0.5 * (sigma1 * wp) ** 2 - 0.5 * (sigma2 * wq) ** 2)
    return out


def build_morlet(params: FilterParams, j: int, k: int, height: int, width: int) -> np.ndarray:
    """Frequency-domain Morlet at scale j and angle index k, unit peak.

    The returned filter has exactly zero response at the DC bin.
    """
    if not 0 <= j < params.J:
        raise ValueError(f"scale index {j} out of range [0, {params.J})")
    if not 0 <= k < params.L:
        raise ValueError(f"angle index {k} out of range [0, {params.L})")
    sigma = params.sigma0 * 2.0 ** j
    xi = params.xi0 / 2.0 ** j
    theta = k * math.pi / params.L
    w1, w2 = _freq_grid(height, width)
    bump = _aliased_gaussian(w1, w2, sigma, sigma / params.slant, theta, xi)
    base = _aliased_gaussian(w1, w2, sigma, sigma / params.slant, theta, 0.0)
    kappa = bump[0, 0] / base[0, 0]
    psi = bump - kappa * base
    psi /= np.abs(psi).max()
    return psi.astype(np.complex128)


def build_lowpass(params: FilterParams, height: int, width: int) -> np.ndarray:
    """Frequency-domain Gaussian low-pass, spatial std sigma0 * 2**(J-1)."""
    if height < 2 ** params.J or width < 2 ** params.J:
        raise ValueError(f"geometry {height}x{width} smaller than 2^J = {2 ** params.J}")
    sigma = params.sigma0 * 2.0 ** (params.J - 1)
    w1, w2 = _freq_grid(height, width)
    phi = _aliased_gaussian(w1, w2, sigma, sigma, 0.0, 0.0)
    phi /= phi[0, 0]  # unit DC gain, exact
    return phi.astype(np.complex128)


def build_bank(params: FilterParams, height: int, width: int) -> FilterBank:
    """Build all J*L band-pass filters plus the low-pass for one geometry."""
    bank = FilterBank(params=params, height=height, width=width)
    bank.phi_hat = build_lowpass(params, height, width)
    for j in range(params.J):
        for k in range(params.L):
            bank.psi_hat[(j, k)] = build_morlet(params, j, k, height, width)
    # Rescale band-passes so the Littlewood-Paley sum stays <= 1 everywhere
    # (the low-pass is pinned by its unit DC gain and cannot be touched).
    lp = np.zeros((height, width))
    for f in bank.psi_hat.values():
        lp += np.abs(f) ** 2
    head = np.abs(bank.phi_hat) ** 2
    mask = lp > 1e-12
    c2 = np.min((1.0 - head[mask]) / lp[mask])
    scale = min(1.0, math.sqrt(max(c2, 0.0)))
    for key in bank.psi_hat:
        bank.psi_hat[key] = bank.psi_hat[key] * scale
    return bank


def littlewood_paley_report(bank: FilterBank) -> tuple[float, float]:
    """(min, max) over frequencies of the filter-bank frame sum."""
    total = np.abs(bank.phi_hat) ** 2
    for f in bank.psi_hat.values():
        total += np.abs(f) ** 2
    return float(total.min()), float(total.max())
