"""Mesh refinement on the stationary vortex: first-order convergence.

A vortex spins in a radial gravity well; the exact state is steady, so the
error after one time unit is pure scheme error.  This demo runs the two
coarsest meshes at each stiffness value to keep the runtime down (the full
refinement study lives in the benchmark harness as table2).
"""

import os

from wbeuler import bench
from wbeuler.diagnostics import eoc

outdir = os.path.join(os.path.dirname(__file__), "out", "vortex")
meshes = (25, 50)

print(f"{'eps':>6} {'n':>5} {'L1(rho)':>12} {'L1(mom x)':>12} {'EOC rho':>9} {'EOC mom':>9}")
for eps in (1e-1, 1e-2, 1e-3):
    prev = None
    for n in meshes:
        cfg = bench.CaseConfig(name="vortex2d", eps=eps, n=(n,), outdir=outdir,
                               label=f"vortex_eps{eps:g}_n{n}")
        rep = bench.run_case(cfg)
        e = rep.errors
        if prev is None:
            orders = ("", "")
        else:
            orders = (f"{eoc(prev['l1_rho'], e['l1_rho']):.3f}",
                      f"{eoc(prev['l1_mom_x'], e['l1_mom_x']):.3f}")
        print(f"{eps:>6g} {n:>5d} {e['l1_rho']:>12.3e} {e['l1_mom_x']:>12.3e} "
              f"{orders[0]:>9} {orders[1]:>9}")
        prev = e
print("note: density errors scale like eps^2 on top of the O(h) rate")
