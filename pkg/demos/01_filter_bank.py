"""
Build and inspect a Morlet filter bank
=======================================

The bank lives entirely in the frequency domain: L oriented band-pass
wavelets at each of J dyadic scales, plus one Gaussian low-pass.  We dump
magnitude heatmaps as PNGs and check the Littlewood-Paley frame sum.
"""

import os

import numpy as np

from frscatter.filters import FilterParams, build_bank, littlewood_paley_report
from frscatter.tensorio import ensure_dir, png_write

out = "demo_out/filters"
ensure_dir(out)

params = FilterParams(J=3, L=8)
bank = build_bank(params, 32, 32)

print(f"{len(bank.psi_hat)} band-pass wavelets (J={params.J} scales x L={params.L} angles)")

# fftshift puts the zero frequency in the middle so the bumps are visible
for (j, k), psi in sorted(bank.psi_hat.items()):
    mag = np.fft.fftshift(np.abs(psi))
    png_write(mag / mag.max(), os.path.join(out, f"psi_j{j}_k{k}.png"))

phi = np.fft.fftshift(np.abs(bank.phi_hat))
png_write(phi / phi.max(), os.path.join(out, "phi.png"))

# the frame sum |phi|^2 + sum |psi|^2 should stay in (0, 1]: no frequency is
# amplified and none is completely dropped
lo, hi = littlewood_paley_report(bank)
print(f"Littlewood-Paley frame bounds: [{lo:.6f}, {hi:.6f}]")
print(f"heatmaps written to {out}/")
