"""Fractional convolution and the 2-D scattering cascade.

The fractional convolution conjugates an ordinary circular convolution with
quadratic chirp phases:

    y(t) = e^{-i/2 t^2 cot(theta)} * [ (x(t) e^{+i/2 t^2 cot(theta)}) * h(t) ]

with theta = alpha*pi/2 per spatial axis and t the centered normalized grid
coordinate (index - size/2) / size.  At alpha = 1 the chirps are identically
one and the operation is a plain circular convolution.

The cascade computes, for every frequency-decreasing path p of order <= 2,
the propagated modulus U[p]x and the output S[p]x = |U[p]x (.) phi_J|
subsampled by 2**J, then stacks the outputs in canonical path order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .filters import FilterBank


@dataclass(frozen=True)
class FracOrderPair:
    """Fractional orders (rows, columns); both must lie strictly in (0, 2)."""

    alpha1: float
    alpha2: float

    def __post_init__(self):
        for a in (self.alpha1, self.alpha2):
            # theta = a*pi/2 must stay bounded away from multiples of pi
            if not 1e-6 < a < 2.0 - 1e-6:
                raise ValueError(f"fractional order {a} gives an infinite cotangent")

    def cotangents(self) -> tuple[float, float]:
        return _cot_half_pi(self.alpha1), _cot_half_pi(self.alpha2)


def _cot_half_pi(alpha: float) -> float:
    # Exact zero at alpha == 1 so the fractional path reduces to the plain one.
    if abs(alpha - 1.0) < 1e-12:
        return 0.0
    theta = alpha * math.pi / 2.0
    return math.cos(theta) / math.sin(theta)


@dataclass(frozen=True)
class ScatterPath:
    """A scattering path: order 0, 1 or 2 with its (j, k) filter indices."""

    order: int
    lambdas: tuple = ()

    def __post_init__(self):
        if self.order != len(self.lambdas):
            raise ValueError("order must equal number of filter indices")


@dataclass
class PathTable:
    """Canonically ordered frequency-decreasing paths up to order 2."""

    J: int
    L: int
    paths: list

    @property
    def counts(self) -> tuple[int, int, int]:
        c = [0, 0, 0]
        for p in self.paths:
            c[p.order] += 1
        return tuple(c)

    def __len__(self):
        return len(self.paths)


def enumerate_paths(J: int, L: int) -> PathTable:
    """All paths: 1 order-0, L*J order-1, L^2*J*(J-1)/2 order-2 (j1 < j2)."""
    if J < 1 or L < 1:
        raise ValueError("require J >= 1 and L >= 1")
    paths = [ScatterPath(0)]
    for j1 in range(J):
        for k1 in range(L):
            paths.append(ScatterPath(1, ((j1, k1),)))
    for j1 in range(J):
        for k1 in range(L):
            for j2 in range(j1 + 1, J):
                for k2 in range(L):
                    paths.append(ScatterPath(2, ((j1, k1), (j2, k2))))
    # canonical order: order, then lexicographic on the index tuples
    paths.sort(key=lambda p: (p.order, p.lambdas))
    return PathTable(J=J, L=L, paths=paths)


@dataclass
class Embedding:
    """Scattering output: tensor of shape N3 x P x (N1/2^J) x (N2/2^J)."""

    tensor: np.ndarray
    path_table: PathTable
    alpha: FracOrderPair


def chirp(alpha: FracOrderPair, n_rows: int, n_cols: int) -> np.ndarray:
    """Unit-modulus quadratic phase exp(i/2 (t1^2 cot th1 + t2^2 cot th2))."""
    c1, c2 = alpha.cotangents()
    t1 = (np.arange(n_rows) - n_rows / 2.0) / n_rows
    t2 = (np.arange(n_cols) - n_cols / 2.0) / n_cols
    phase = 0.5 * (c1 * t1[:, None] ** 2 + c2 * t2[None, :] ** 2)
    return np.exp(1j * phase)


def frconv2(x: np.ndarray, h_hat: np.ndarray, alpha: FracOrderPair) -> np.ndarray:
    """Fractional circular convolution of image x with a frequency-domain filter."""
    if x.shape != h_hat.shape:
        raise ValueError(f"geometry mismatch {x.shape} vs {h_hat.shape}")
    c = chirp(alpha, *x.shape)
    return np.conj(c) * np.fft.ifft2(np.fft.fft2(c * x) * h_hat)


def wavelet_modulus(x: np.ndarray, psi_hat: np.ndarray, alpha: FracOrderPair) -> np.ndarray:
    """|x (.) psi|: real, non-negative."""
    return np.abs(frconv2(x, psi_hat, alpha))


def scatter(
    x: np.ndarray,
    bank: FilterBank,
    alpha: FracOrderPair,
    table: PathTable,
) -> Embedding:
    """Full order-2 scattering of a single image.

    For each path the propagated signal is cascaded through wavelet-modulus
    operators, low-passed with phi_J (fractionally, same alpha), taken in
    modulus, and subsampled by stride 2**J on both axes.
    """
    if x.shape != (bank.height, bank.width):
        raise ValueError(f"image shape {x.shape} does not match bank geometry")
    if (table.J, table.L) != (bank.params.J, bank.params.L):
        raise ValueError("path table does not match bank (J, L)")
    J, L = table.J, table.L
    stride = 2 ** J
    c = chirp(alpha, bank.height, bank.width)
    cc = np.conj(c)
    phi = bank.phi_hat

    def frconv_hat(u):
        # fractional convolution reusing the cached chirp
        return lambda h_hat: cc * np.fft.ifft2(np.fft.fft2(c * u) * h_hat)

    def out_channel(u):
        s = np.abs(frconv_hat(u)(phi))
        return s[::stride, ::stride]

    # propagate layer by layer; memoize U[p] for order-1 prefixes
    u0 = x.astype(np.float64)
    u1 = {}
    for j1 in range(J):
        for k1 in range(L):
            u1[(j1, k1)] = np.abs(frconv_hat(u0)(bank.psi_hat[(j1, k1)]))
    channels = {}
    channels[ScatterPath(0)] = out_channel(u0)
    for key, u in u1.items():
        channels[ScatterPath(1, (key,))] = out_channel(u)
    for (j1, k1), u in u1.items():
        conv_u = frconv_hat(u)
        for j2 in range(j1 + 1, J):
            for k2 in range(L):
                u2 = np.abs(conv_u(bank.psi_hat[(j2, k2)]))
                channels[ScatterPath(2, ((j1, k1), (j2, k2)))] = out_channel(u2)
    stacked = np.stack([channels[p] for p in table.paths])
    return Embedding(tensor=stacked[None], path_table=table, alpha=alpha)


def scatter_batch(
    images: np.ndarray,
    bank: FilterBank,
    alpha: FracOrderPair,
    table: PathTable,
    workers: int = 1,
) -> Embedding:
    """Scatter a batch of shape N x 1 x H x W; deterministic for any worker count."""
    if images.ndim != 4 or images.shape[1] != 1:
        raise ValueError("expected images of shape N x 1 x H x W")
    n = images.shape[0]
    h, w = (bank.height // 2 ** table.J, bank.width // 2 ** table.J)
    if n == 0:
        empty = np.zeros((0, len(table), h, w))
        return Embedding(tensor=empty, path_table=table, alpha=alpha)

    def one(i):
        return scatter(images[i, 0], bank, alpha, table).tensor[0]

    if workers <= 1:
        results = [one(i) for i in range(n)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(n)))
    return Embedding(tensor=np.stack(results), path_table=table, alpha=alpha)
