"""Bifurcation diagram over the wall position x_wall.

Sweeping the wall from 2.0 down to 0.2 takes the deterministic skeleton
through a period-1 -> period-2 -> period-3 cascade; with the quantum
noise on, a window around x_wall ~ 0.3-0.5 turns chaotic (positive
largest Lyapunov exponent).  The Poincare section (downward P = 0
crossings) is plotted from the skeleton because the noise smears the
section clusters; the chaos classification comes from the noisy
dynamics' Lyapunov exponent.

This demo runs a coarse grid (step 0.05) to stay quick; the CLI
`softimpact bifurcation` runs the production protocol.

Run:  python demos/03_bifurcation_diagram.py   (~2 min)
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from softimpact.bath import BathParams, load_or_fit
from softimpact.diagnostics import bifurcation_scan
from softimpact.model import SystemParams

HERE = os.path.dirname(os.path.abspath(__file__))

bath = BathParams()
model = load_or_fit(bath, 3)
p = SystemParams(x_wall=0.5, F=1.82)
grid = np.round(np.arange(0.20, 2.001, 0.05), 2)

skeleton = bifurcation_scan(p, bath, model, grid, seed=0,
                            n_transient_cycles=200, n_record_cycles=200,
                            sample_stride=2, nonlinear_feed=True,
                            noise_scale=0.0)
noisy = bifurcation_scan(p, bath, model, grid, seed=1,
                         n_transient_cycles=200, n_record_cycles=200,
                         sample_stride=2, nonlinear_feed=True)

fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(9, 7), sharex=True,
                               gridspec_kw={"height_ratios": [2, 1]})
for xw, xs in zip(skeleton.x_wall, skeleton.sections):
    ax1.plot(np.full(len(xs), xw), xs, "k.", ms=1.5)
ax1.set_ylabel("X on Poincare section")
ax1.set_title("skeleton bifurcation diagram (F = 1.82)")

ax2.plot(noisy.x_wall, noisy.lyapunov, "b.-", lw=0.8, label="noisy")
ax2.plot(skeleton.x_wall, skeleton.lyapunov, "k.--", lw=0.8,
         label="skeleton")
ax2.axhline(0.0, color="r", lw=0.8)
ax2.set_xlabel("x_wall")
ax2.set_ylabel("largest Lyapunov exponent")
ax2.legend()

fig.tight_layout()
out = os.path.join(HERE, "bifurcation.png")
fig.savefig(out, dpi=120)
print(f"wrote {out}")
chaotic = noisy.x_wall[noisy.lyapunov > 0]
if len(chaotic):
    print(f"chaotic window (noisy): x_wall in "
          f"[{chaotic.min():.2f}, {chaotic.max():.2f}]")
