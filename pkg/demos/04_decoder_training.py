"""
Training a decoder to invert the scattering encoder
====================================================

The encoder (scattering + FMF) is frozen; a small convolutional decoder is
trained with Adam under an L1 objective to map embeddings back to images.
With only a handful of images the decoder should overfit them almost
perfectly, which is a useful sanity check of the whole training loop.
"""

import numpy as np

from frscatter.filters import FilterParams, build_bank
from frscatter.metrics import evaluate_split
from frscatter.nn import g2_build
from frscatter.reduction import fmf
from frscatter.scattering import FracOrderPair, enumerate_paths, scatter_batch
from frscatter.tensorio import SeededRng
from frscatter.training import TrainConfig, generate, train

rng = np.random.default_rng(2)

# a few smooth random images in [0, 1]
images = np.zeros((8, 1, 32, 32))
for i in range(8):
    base = rng.random((8, 8))
    images[i, 0] = np.kron(base, np.ones((4, 4)))

params = FilterParams(J=3, L=8)
bank = build_bank(params, 32, 32)
table = enumerate_paths(params.J, params.L)
emb = scatter_batch(images, bank, FracOrderPair(1.0, 1.0), table)
z = fmf(emb)
print(f"decoder input: {z.shape}")

model = g2_build(z.shape[1], z.shape[2], 32, 32, SeededRng(0))
cfg = TrainConfig(batch_size=8, max_steps=400, seed=0, eval_interval=100,
                  out_dir="demo_out/decoder")
curve = train(z, images, model, cfg)

print(f"loss: {curve[0]['loss']:.4f} (step 1) -> {curve[-1]['loss']:.4f} (step {curve[-1]['step']})")
report = evaluate_split(images, generate(model, z))
print(f"train PSNR {report.mean_psnr:.2f} dB, SSIM {report.mean_ssim:.4f}")
print("checkpoints and curve.csv written to demo_out/decoder/")
