"""Benchmark case setups.

Every case lives on the unit interval/square and is described by a
CaseSetup bundling the grid, gas law, discrete hydrostatic reference,
initial data (both staggered and colocated), and the run horizon.  The
stationary-vortex exact solution is provided in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import PERIODIC, STEADY, TRANSMISSIVE, WALL, BoundaryCondition, FaceField, build_grid
from .solver import FluidState, SchemeParams, make_state
from .thermo import GasLaw, hydrostatic_from_potential


def _zero(*coords):
    return np.zeros(np.broadcast(*coords).shape) if len(coords) > 1 else np.zeros_like(coords[0])


POTENTIALS = {
    "zero": _zero,
    "linear": lambda *c: c[0] + 0.0 * sum(c[1:], np.zeros_like(c[0])),
    "quadratic": lambda *c: 0.5 * c[0] ** 2 + 0.0 * sum(c[1:], np.zeros_like(c[0])),
    "sine": lambda *c: np.sin(2.0 * np.pi * c[0]) + 0.0 * sum(c[1:], np.zeros_like(c[0])),
    "diag": lambda x, y: x + y,
    "radial": lambda x, y: (x - 0.5) ** 2 + (y - 0.5) ** 2,
    "radial_half": lambda x, y: 0.5 * ((x - 0.5) ** 2 + (y - 0.5) ** 2),
}


def get_potential(name):
    try:
        return POTENTIALS[name]
    except KeyError:
        raise KeyError(
            f"unknown potential {name!r}; choose from {sorted(POTENTIALS)}"
        ) from None


@dataclass
class CaseSetup:
    name: str
    grid: object
    law: GasLaw
    eps: float
    hydro: object
    phi: np.ndarray
    t_end: float
    rho0: np.ndarray
    face_velocity: FaceField
    cell_velocity: tuple
    params: SchemeParams
    potential: str
    drho0: np.ndarray | None = None
    zeta: float = 0.0
    meta: dict = field(default_factory=dict)

    def initial_state(self):
        drho0 = self.rho0 - self.hydro.rho if self.drho0 is None else self.drho0
        return make_state(self.grid, self.rho0, self.face_velocity, drho=drho0)

    def colocated_initial(self):
        from .rusanov import make_colocated_state

        return make_colocated_state(self.grid, self.rho0, self.cell_velocity)


def _params(eps, **kw):
    return SchemeParams(eps=eps, **kw)


def _setup_common(dim, n, bc_tag, potential_name, gamma, eps, t_end, params_kw):
    n = (n,) if np.isscalar(n) else tuple(n)
    if len(n) == 1 and dim == 2:
        n = (n[0], n[0])
    bc = BoundaryCondition.uniform(bc_tag, dim)
    grid = build_grid([1.0] * dim, n, bc)
    law = GasLaw(gamma)
    hydro = hydrostatic_from_potential(grid, law, get_potential(potential_name))
    # cap dt at T/100: hydrostatic stretches (and near-relaxed tails) make the
    # CFL formula vacuous, and huge steps there amplify quantisation noise
    params_kw = dict(params_kw)
    params_kw.setdefault("dt_max", t_end / 100.0)
    params = _params(eps, **params_kw)
    return grid, law, hydro, params


def wellbalance1d(eps=1e-2, potential="linear", n=100, gamma=1.4, t_end=2.0,
                  bc=WALL, **params_kw):
    """Hydrostatic profile at rest; any drift is pure scheme error."""
    grid, law, hydro, params = _setup_common(1, n, bc, potential, gamma, eps, t_end, params_kw)
    return CaseSetup(
        name="wellbalance1d", grid=grid, law=law, eps=eps, hydro=hydro,
        phi=hydro.phi, t_end=t_end, rho0=hydro.rho.copy(),
        face_velocity=FaceField.zeros(grid),
        cell_velocity=(np.zeros(tuple(grid.n)),),
        params=params, potential=potential, drho0=np.zeros(tuple(grid.n)),
    )


def sod1d(eps=1.0, n=200, gamma=1.4, t_end=0.2, **params_kw):
    """Sod shock tube on a linear potential, wall boundaries."""
    grid, law, hydro, params = _setup_common(1, n, WALL, "linear", gamma, eps, t_end, params_kw)
    x = grid.cell_center_mesh()[0]
    rho0 = np.where(x < 0.5, 1.0, 0.125)
    return CaseSetup(
        name="sod1d", grid=grid, law=law, eps=eps, hydro=hydro, phi=hydro.phi,
        t_end=t_end, rho0=rho0, face_velocity=FaceField.zeros(grid),
        cell_velocity=(np.zeros_like(rho0),), params=params, potential="linear",
    )


def pert1d(eps=1.0, zeta=None, n=100, gamma=1.4, t_end=0.25, bc=STEADY, **params_kw):
    """Gaussian density bump on the linear-potential equilibrium.

    zeta defaults to eps^2 in the stiff regime (well-prepared data) and to
    1e-3 at eps=1.
    """
    if zeta is None:
        zeta = 1e-3 if eps >= 1.0 else eps**2
    grid, law, hydro, params = _setup_common(1, n, bc, "linear", gamma, eps, t_end, params_kw)
    x = grid.cell_center_mesh()[0]
    bump = zeta * np.exp(-100.0 * (x - 0.5) ** 2)
    rho0 = hydro.rho + bump
    return CaseSetup(
        name="pert1d", grid=grid, law=law, eps=eps, hydro=hydro, phi=hydro.phi,
        t_end=t_end, rho0=rho0, face_velocity=FaceField.zeros(grid),
        cell_velocity=(np.zeros_like(rho0),), params=params, potential="linear",
        drho0=bump, zeta=zeta,
    )


def rarefaction2d(eps=1.0, n=100, gamma=2.0, t_end=0.1, **params_kw):
    """Strong double rarefaction (u = -/+5) over a radial well; vacuum forms.

    The density-ratio factor of the dt bound is dropped here: the outflow
    jump exceeds the escape speed, cells empty out, and the ratio cap would
    drag dt to zero with them.  A small density floor absorbs the cells
    that reach zero in finite time (the interface density of the mass flux
    stays at the fuller neighbour's scale, so no dt keeps them positive).
    """
    params_kw.setdefault("density_ratio_cap", False)
    params_kw.setdefault("vacuum_floor", 1e-10)
    grid, law, hydro, params = _setup_common(
        2, n, TRANSMISSIVE, "radial_half", gamma, eps, t_end, params_kw
    )
    xf = grid.face_center_mesh(0)[0]
    u = FaceField.zeros(grid)
    u.comps[0][...] = np.where(xf <= 0.5, -5.0, 5.0)
    grid.sync_face(u)
    xc = grid.cell_center_mesh()[0]
    uc = np.where(xc <= 0.5, -5.0, 5.0)
    return CaseSetup(
        name="rarefaction2d", grid=grid, law=law, eps=eps, hydro=hydro,
        phi=hydro.phi, t_end=t_end, rho0=hydro.rho.copy(), face_velocity=u,
        cell_velocity=(uc, np.zeros_like(uc)), params=params,
        potential="radial_half", drho0=np.zeros(tuple(grid.n)),
    )


def pert2d(eps=1.0, zeta=None, n=50, gamma=1.4, t_end=None, **params_kw):
    """Gaussian bump on the diagonal-potential equilibrium, open boundaries.

    The stiff runs use the shorter horizons on which the reference results
    are reported (the perturbation leaves the domain quickly).
    """
    if zeta is None:
        zeta = 1e-1 if eps >= 1.0 else eps**2
    if t_end is None:
        t_end = 0.05 if eps >= 1.0 else (0.005 if eps >= 0.1 else 0.001)
    grid, law, hydro, params = _setup_common(2, n, TRANSMISSIVE, "diag", gamma, eps, t_end, params_kw)
    x, y = grid.cell_center_mesh()
    bump = zeta * np.exp(-100.0 * ((x - 0.3) ** 2 + (y - 0.3) ** 2))
    rho0 = hydro.rho + bump
    return CaseSetup(
        name="pert2d", grid=grid, law=law, eps=eps, hydro=hydro, phi=hydro.phi,
        t_end=t_end, rho0=rho0, face_velocity=FaceField.zeros(grid),
        cell_velocity=(np.zeros_like(rho0), np.zeros_like(rho0)),
        params=params, potential="diag", drho0=bump, zeta=zeta,
    )


# stationary vortex: angular speed a1*r / a2+a3*r / 0 over [0,r1], (r1,r2], beyond
VORTEX_R1 = 0.2
VORTEX_R2 = 0.4
VORTEX_ABAR = 0.1


def vortex_speed(r):
    """Piecewise angular velocity u_theta(r) of the stationary vortex."""
    r = np.asarray(r, dtype=float)
    a1 = VORTEX_ABAR / VORTEX_R1
    a2 = -VORTEX_ABAR * VORTEX_R2 / (VORTEX_R1 - VORTEX_R2)
    a3 = VORTEX_ABAR / (VORTEX_R1 - VORTEX_R2)
    return np.where(
        r <= VORTEX_R1,
        a1 * r,
        np.where(r <= VORTEX_R2, a2 + a3 * r, 0.0),
    )


def vortex_centripetal_integral(r):
    """I(r) = int_0^r u_theta(s)^2 / s ds, in closed form per zone."""
    r = np.asarray(r, dtype=float)
    a1 = VORTEX_ABAR / VORTEX_R1
    a2 = -VORTEX_ABAR * VORTEX_R2 / (VORTEX_R1 - VORTEX_R2)
    a3 = VORTEX_ABAR / (VORTEX_R1 - VORTEX_R2)
    r1, r2 = VORTEX_R1, VORTEX_R2
    # zone values accumulate; clamp the argument into each zone
    rz1 = np.minimum(r, r1)
    i1 = 0.5 * a1**2 * rz1**2
    rz2 = np.clip(r, r1, r2)
    with np.errstate(divide="ignore", invalid="ignore"):
        i2 = (
            a2**2 * np.log(rz2 / r1)
            + 2.0 * a2 * a3 * (rz2 - r1)
            + 0.5 * a3**2 * (rz2**2 - r1**2)
        )
    return i1 + np.where(r > r1, i2, 0.0)


def vortex_exact(x, y, eps):
    """Stationary solution (rho, u, v); gamma = 2 and phi = r^2 are implied."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = x - 0.5
    dy = y - 0.5
    r = np.sqrt(dx**2 + dy**2)
    rho = 1.0 + 0.5 * eps**2 * vortex_centripetal_integral(r) - 0.5 * r**2
    a1 = VORTEX_ABAR / VORTEX_R1
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(r > 0.0, vortex_speed(r) / np.where(r > 0.0, r, 1.0), a1)
    u = ratio * dy
    v = -ratio * dx
    return rho, u, v


def vortex2d(eps=1e-1, n=50, t_end=1.0, **params_kw):
    """Stationary vortex in a gravitational well; gamma = 2, periodic box."""
    grid, law, hydro, params = _setup_common(2, n, PERIODIC, "radial", 2.0, eps, t_end, params_kw)
    xc, yc = grid.cell_center_mesh()
    rho0, _, _ = vortex_exact(xc, yc, eps)
    u = FaceField.zeros(grid)
    xf, yf = grid.face_center_mesh(0)
    _, uf, _ = vortex_exact(xf, yf, eps)
    u.comps[0][...] = uf
    xg, yg = grid.face_center_mesh(1)
    _, _, vg = vortex_exact(xg, yg, eps)
    u.comps[1][...] = vg
    grid.sync_face(u)
    _, uc, vc = vortex_exact(xc, yc, eps)
    return CaseSetup(
        name="vortex2d", grid=grid, law=law, eps=eps, hydro=hydro, phi=hydro.phi,
        t_end=t_end, rho0=rho0, face_velocity=u, cell_velocity=(uc, vc),
        params=params, potential="radial",
    )


def ap_sweep(eps=1e-1, **kw):
    """Alias of pert1d; the sweep driver varies eps with zeta = eps^2."""
    case = pert1d(eps=eps, **kw)
    return CaseSetup(**{**case.__dict__, "name": "ap_sweep"})


CASES = {
    "wellbalance1d": wellbalance1d,
    "sod1d": sod1d,
    "pert1d": pert1d,
    "rarefaction2d": rarefaction2d,
    "pert2d": pert2d,
    "vortex2d": vortex2d,
    "ap_sweep": ap_sweep,
}


def build_case(name, **kwargs):
    try:
        builder = CASES[name]
    except KeyError:
        raise KeyError(f"unknown case {name!r}; choose from {sorted(CASES)}") from None
    return builder(**kwargs)
