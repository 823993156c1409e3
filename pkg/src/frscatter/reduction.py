"""Embedding dimensionality reduction: feature-map fusion and PCA.

Feature-map fusion keeps the order-0 and order-1 channels verbatim and
averages groups of order-2 channels down to L*J fused maps, shrinking the
channel count from 1 + LJ + L^2 J(J-1)/2 to 1 + 2LJ.

The PCA baseline flattens embeddings, mean-centers, and projects onto the
top singular directions, optionally whitening so training projections have
unit variance per component.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .scattering import Embedding
from .tensorio import tensor_read, tensor_write


@dataclass(frozen=True)
class FmfConfig:
    grouping: str = "consecutive_blocks"  # or "parent_path"

    def __post_init__(self):
        if self.grouping not in ("consecutive_blocks", "parent_path"):
            raise ValueError(f"unknown grouping {self.grouping!r}")


def fmf(e: Embedding, cfg: FmfConfig = FmfConfig()) -> np.ndarray:
    """Fuse order-2 channels; output has 1 + 2LJ channels.

    consecutive_blocks averages contiguous runs of L(J-1)/2 channels in
    canonical order; parent_path averages all order-2 channels sharing the
    same first-layer filter (j1, k1).
    """
    table = e.path_table
    J, L = table.J, table.L
    n0, n1, n2 = table.counts
    if e.tensor.shape[1] != len(table):
        raise ValueError("embedding channel count does not match path table")
    head = e.tensor[:, : n0 + n1]
    order2 = e.tensor[:, n0 + n1:]
    if n2 == 0:
        return head.copy()
    if cfg.grouping == "consecutive_blocks":
        if (L * (J - 1)) % 2 != 0:
            raise ValueError(f"L(J-1)/2 = {L * (J - 1) / 2} is not an integer")
        gs = L * (J - 1) // 2
        if gs == 0 or n2 % gs != 0:
            raise ValueError("group size does not divide the order-2 channel count")
        n, _, h, w = order2.shape
        fused = order2.reshape(n, n2 // gs, gs, h, w).mean(axis=2)
    else:
        paths2 = [p for p in table.paths if p.order == 2]
        groups = {}
        for idx, p in enumerate(paths2):
            groups.setdefault(p.lambdas[0], []).append(idx)
        fused = np.stack(
            [order2[:, idxs].mean(axis=1) for _, idxs in sorted(groups.items())],
            axis=1,
        )
    return np.concatenate([head, fused], axis=1)


@dataclass
class PcaModel:
    """Frozen train-fit PCA transform (rows of ``basis`` are orthonormal)."""

    mean: np.ndarray      # (D,)
    basis: np.ndarray     # (U_dim, D)
    scales: np.ndarray    # (U_dim,) per-component std on the training set
    whiten: bool
    u_dim: int


def pca_fit(train: np.ndarray, u_dim: int, whiten: bool = True) -> PcaModel:
    """Fit PCA on rows of ``train`` (n_samples x D) via SVD of centered data."""
    train = np.asarray(train, dtype=np.float64)
    n, d = train.shape
    if n < 2:
        raise ValueError("need at least 2 samples")
    if u_dim > min(n - 1, d):
        raise ValueError(f"u_dim {u_dim} exceeds min(n-1, D) = {min(n - 1, d)}")
    mean = train.mean(axis=0)
    centered = train - mean
    if np.abs(centered).max() < 1e-12:
        raise ValueError("degenerate input: all samples identical")
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    scales = s[:u_dim] / np.sqrt(n - 1)
    return PcaModel(mean=mean, basis=vt[:u_dim], scales=scales, whiten=whiten, u_dim=u_dim)


def pca_project(e: np.ndarray, m: PcaModel) -> np.ndarray:
    """Project flattened embedding(s) onto the principal directions."""
    e = np.asarray(e, dtype=np.float64)
    if e.shape[-1] != m.mean.shape[0]:
        raise ValueError("embedding length does not match model")
    z = (e - m.mean) @ m.basis.T
    if m.whiten:
        safe = np.where(m.scales < 1e-8, 1.0, m.scales)
        z = z / safe
    return z


def pca_reconstruct(z: np.ndarray, m: PcaModel) -> np.ndarray:
    """Approximate inverse of :func:`pca_project`."""
    z = np.asarray(z, dtype=np.float64)
    if m.whiten:
        safe = np.where(m.scales < 1e-8, 1.0, m.scales)
        z = z * safe
    return z @ m.basis + m.mean


def pca_save(m: PcaModel, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    tensor_write(m.mean, os.path.join(directory, "mean.frst"))
    tensor_write(m.basis, os.path.join(directory, "basis.frst"))
    tensor_write(m.scales, os.path.join(directory, "scales.frst"))
    with open(os.path.join(directory, "model.json"), "w") as f:
        json.dump({"whiten": m.whiten, "u_dim": m.u_dim}, f)


def pca_load(directory) -> PcaModel:
    with open(os.path.join(directory, "model.json")) as f:
        meta = json.load(f)
    return PcaModel(
        mean=tensor_read(os.path.join(directory, "mean.frst")),
        basis=tensor_read(os.path.join(directory, "basis.frst")),
        scales=tensor_read(os.path.join(directory, "scales.frst")),
        whiten=bool(meta["whiten"]),
        u_dim=int(meta["u_dim"]),
    )
