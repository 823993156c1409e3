"""
Two ways to shrink an embedding
================================

A 32x32 image scattered at J=3, L=8 gives 217 feature maps of 4x4 pixels.
Feature-map fusion (FMF) averages the second-order maps in groups and keeps
the spatial layout; PCA flattens everything and keeps the top directions.
"""

import numpy as np

from frscatter.filters import FilterParams, build_bank
from frscatter.reduction import FmfConfig, fmf, pca_fit, pca_project, pca_reconstruct
from frscatter.scattering import FracOrderPair, enumerate_paths, scatter_batch

rng = np.random.default_rng(1)
images = rng.random((40, 1, 32, 32))

params = FilterParams(J=3, L=8)
bank = build_bank(params, 32, 32)
table = enumerate_paths(params.J, params.L)
emb = scatter_batch(images, bank, FracOrderPair(1.0, 1.0), table)
print(f"raw embeddings: {emb.tensor.shape}")

# FMF: 1 + 24 + 192 maps -> 1 + 24 + 24 maps, still 4x4 each
fused = fmf(emb, FmfConfig("consecutive_blocks"))
print(f"FMF tensor:     {fused.shape}")

# PCA: flatten to 3472 numbers, keep 30 whitened components
flat = emb.tensor.reshape(emb.tensor.shape[0], -1)
model = pca_fit(flat, 30, whiten=True)
z = pca_project(flat, model)
print(f"PCA vector:     {z.shape}")

# whitening really does give unit variance per component
print(f"component variances: min {z.var(axis=0, ddof=1).min():.4f}, "
      f"max {z.var(axis=0, ddof=1).max():.4f}")

# reconstruction error grows as you keep fewer components
for udim in (30, 10, 3):
    m = pca_fit(flat, udim, whiten=True)
    rec = pca_reconstruct(pca_project(flat, m), m)
    err = np.linalg.norm(rec - flat) / np.linalg.norm(flat)
    print(f"PCA udim={udim:3d}: relative reconstruction error {err:.4f}")
