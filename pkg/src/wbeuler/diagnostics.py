"""Energy bookkeeping, error norms, and derived fields."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import FaceField, _slc, dual_average
from .thermo import relative_internal_energy


@dataclass(frozen=True)
class EnergyBreakdown:
    t: float
    internal: float
    kinetic: float

    @property
    def total(self):
        return self.internal + self.kinetic


def total_energy(grid, law, rho, u, rho_ref, eps, drho=None):
    """Relative energy of the state against the hydrostatic profile.

    internal = (1/eps^2) sum_K |K| Pi(rho_K | rho_ref_K)
    kinetic  = sum over interior faces of (1/2) |D_sigma| rhoD u^2

    This is the scheme's Lyapunov functional: each step dissipates it.
    drho (= rho - rho_ref, if tracked separately) makes the internal part
    exact for perturbations below the rounding of rho itself.
    """
    pi = relative_internal_energy(law, rho, rho_ref, drho=drho)
    internal = float(grid.cell_volume * np.sum(pi)) / eps**2
    kinetic = 0.0
    d = dual_average(grid, rho)
    for axis in range(grid.dim):
        sel = grid.interior_mask(axis) & grid.owned_mask(axis)
        vol = grid.dual_volume(axis)
        kinetic += 0.5 * float(np.sum((vol * d[axis] * u[axis] ** 2)[sel]))
    return internal, kinetic


def energy_breakdown(grid, law, state, rho_ref, eps):
    internal, kinetic = total_energy(
        grid, law, state.rho, state.u, rho_ref, eps, drho=getattr(state, "drho", None)
    )
    return EnergyBreakdown(t=state.t, internal=internal, kinetic=kinetic)


def l1_error(grid, a, b=None, axis=None):
    """Volume-weighted L1 norm of a - b (cell arrays or face fields).

    Face fields are weighted with the dual volumes over owned slots, so a
    periodic pair is counted once and boundary half-diamonds at half weight;
    axis restricts the norm to one velocity component.
    """
    if isinstance(a, FaceField):
        total = 0.0
        for ax in range(grid.dim) if axis is None else (axis,):
            diff = a[ax] if b is None else a[ax] - b[ax]
            vol = grid.dual_volume(ax)
            owned = grid.owned_mask(ax)
            total += float(np.sum((vol * np.abs(diff))[owned]))
        return total
    diff = np.asarray(a) if b is None else np.asarray(a) - np.asarray(b)
    return float(grid.cell_volume * np.sum(np.abs(diff)))


def eoc(err_coarse, err_fine, ratio=2.0):
    """Observed convergence order between two mesh levels."""
    if err_coarse <= 0.0 or err_fine <= 0.0:
        raise ValueError("EOC needs strictly positive errors")
    return float(np.log(err_coarse / err_fine) / np.log(ratio))


def face_momentum(grid, rho, u):
    """Dual momentum rhoD * u (the conserved face quantity)."""
    d = dual_average(grid, rho)
    return FaceField([d[i] * u[i] for i in range(grid.dim)])


def cell_velocity(grid, u):
    """Velocity components averaged to cell centres."""
    nd = grid.dim
    comps = []
    for axis in range(nd):
        lo = u[axis][_slc(nd, axis, slice(None, -1))]
        hi = u[axis][_slc(nd, axis, slice(1, None))]
        comps.append(0.5 * (lo + hi))
    return comps


def mach_field(grid, law, rho, u):
    """Cell Mach number |u| / c(rho) in the scaled variables."""
    comps = cell_velocity(grid, u)
    speed_sq = sum(c**2 for c in comps)
    c2 = law.gamma * law.pressure(rho) / rho
    return np.sqrt(speed_sq / c2)


def vorticity_field(grid, u):
    """dv/dx - du/dy at the interior mesh nodes (2D).

    Returns an (nx+1, ny+1) array; rows/columns on non-periodic boundaries
    are left at zero, periodic ones wrap.
    """
    if grid.dim != 2:
        raise ValueError("vorticity is only defined for 2D fields")
    nx, ny = grid.n
    w = np.zeros((nx + 1, ny + 1))
    ux, uy = u[0], u[1]  # shapes (nx+1, ny), (nx, ny+1)
    dv = np.diff(uy, axis=0) / grid.h[0]  # (nx-1, ny+1) at interior x-nodes
    du = np.diff(ux, axis=1) / grid.h[1]  # (nx+1, ny-1) at interior y-nodes
    w[1:nx, 1:ny] = dv[:, 1:ny] - du[1:nx, :]
    if grid.bc.is_periodic(0):
        wrap = (uy[0] - uy[-1]) / grid.h[0]
        w[0, 1:ny] = wrap[1:ny] - du[0, :]
        w[nx, 1:ny] = wrap[1:ny] - du[nx, :]
    if grid.bc.is_periodic(1):
        wrapu = (ux[:, 0] - ux[:, -1]) / grid.h[1]
        w[1:nx, 0] = dv[:, 0] - wrapu[1:nx]
        w[1:nx, ny] = dv[:, ny] - wrapu[1:nx]
    if grid.bc.is_periodic(0) and grid.bc.is_periodic(1):
        corner = (uy[0, 0] - uy[-1, 0]) / grid.h[0] - (ux[0, 0] - ux[0, -1]) / grid.h[1]
        w[0, 0] = w[nx, 0] = w[0, ny] = w[nx, ny] = corner
    return w
