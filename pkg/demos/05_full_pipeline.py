"""
A complete experiment from a plan file
=======================================

A plan names the dataset, the scattering configuration, a list of arms (one
decoder per fractional order / reduction choice) and optional fusion pairs.
Running it produces per-arm artifacts plus master.csv and improvements.csv.
This demo keeps everything tiny so it finishes in under a minute.
"""

import json
import os

import numpy as np

from frscatter.pipeline import run_plan
from frscatter.tensorio import ensure_dir, tensor_write

rng = np.random.default_rng(3)
ensure_dir("demo_out/data")

# 1/f textures standing in for natural images
def textures(n, seed):
    g = np.random.default_rng(seed)
    freqs = np.sqrt(np.add.outer(np.fft.fftfreq(16) ** 2, np.fft.fftfreq(16) ** 2))
    freqs[0, 0] = 1.0
    out = np.zeros((n, 1, 16, 16), dtype=np.float32)
    for i in range(n):
        x = np.real(np.fft.ifft2(np.fft.fft2(g.standard_normal((16, 16))) / freqs))
        out[i, 0] = (x - x.min()) / (x.max() - x.min())
    return out

tensor_write(textures(24, 0), "demo_out/data/train.frst")
tensor_write(textures(8, 1), "demo_out/data/test.frst")

plan = {
    "seed": 42,
    "dataset": {"source": "frst_dir", "dir": "demo_out/data", "train_n": 24, "test_n": 8},
    "scattering": {"J": 2, "L": 4},
    "train": {"batch_size": 8, "max_steps": 150, "base_width": 16},
    "arms": [
        {"name": "classical", "alpha": [1.0, 1.0], "reduction": "fmf", "arch": "g2"},
        {"name": "fractional", "alpha": [0.4, 1.0], "reduction": "fmf", "arch": "g2"},
    ],
    "fusions": [{"a": "fractional", "b": "classical", "weight": 0.5}],
}
with open("demo_out/plan.json", "w") as f:
    json.dump(plan, f, indent=2)

results = run_plan(plan, "demo_out/run")

for name, row in results.items():
    print(f"{name:22s} test PSNR {row['test_psnr']:7.3f} dB   test SSIM {row['test_ssim']:.4f}")

print("\nartifacts:")
for name in sorted(os.listdir("demo_out/run")):
    print(" ", os.path.join("demo_out/run", name))
