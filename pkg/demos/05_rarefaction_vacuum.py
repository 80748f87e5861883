"""Strong double rarefaction over a gravity well: near-vacuum stays tame.

Opposing velocities (u = -/+5) evacuate the centre of the box down to the
vacuum floor.  The run completes with strictly non-negative, finite density;
the final field is plotted on a log scale to make the evacuated band visible.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import LogNorm

from wbeuler.cases import rarefaction2d
from wbeuler.solver import run

case = rarefaction2d(n=100)
state, reports = run(case.grid, case.law, case.initial_state(), case.hydro,
                     case.params, case.t_end)

print(f"steps: {len(reports)}, min rho = {state.rho.min():.3e}, "
      f"max rho = {state.rho.max():.3e}")
print(f"all finite: {bool(np.all(np.isfinite(state.rho)))}")
iters = [r.newton_iters for r in reports if not r.frozen]
print(f"newton iterations: median {int(np.median(iters))}, max {max(iters)}")

outdir = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(outdir, exist_ok=True)
x, y = case.grid.cell_center_mesh()
fig, ax = plt.subplots(figsize=(5.4, 4.4))
im = ax.pcolormesh(x, y, state.rho, norm=LogNorm(vmin=1e-10, vmax=state.rho.max()),
                   shading="auto")
fig.colorbar(im, ax=ax, label="density")
ax.set_title("double rarefaction, T=0.1")
ax.set_xlabel("x")
ax.set_ylabel("y")
fig.tight_layout()
png = os.path.join(outdir, "rarefaction_density.png")
fig.savefig(png, dpi=130)
print("figure written to", png)
