"""Anelastic (zero-Mach) limit scheme on the fixed hydrostatic density.

The density never changes; the unknowns are the face velocities and the
second-order pressure corrector pi.  Each step first solves the linear
Neumann problem

    div( rho_t eta dt grad(pi) ) = div( rho_t U^n ),    eta = eta1 / rho_t_D,

which makes the stabilised field U* = U^n - eta dt grad(pi) satisfy the
anelastic constraint div(rho_t U*) = 0 to solver round-off, then updates the
momentum with the dual-cell convection of the fluxes rho_t U* and the source
rho_t_sigma grad(pi).  With rho_t = 1 and phi = 0 this is the classical
incompressible projection scheme.

pi is defined up to a constant; the zero volume-mean gauge is imposed through
a saddle-point (KKT) formulation, so the solve is deterministic and needs no
pinning of an arbitrary cell.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .diagnostics import l1_error
from .fluxes import dual_convection, dual_fluxes
from .grid import FaceField, discrete_divergence, discrete_gradient, dual_average
from .solver import make_state, run
from .thermo import relative_internal_energy


@dataclass
class AnelasticState:
    U: FaceField
    pi: np.ndarray
    t: float = 0.0

    def copy(self):
        return AnelasticState(self.U.copy(), self.pi.copy(), self.t)


def make_anelastic_state(grid, U=None, t=0.0):
    U = FaceField.zeros(grid) if U is None else U.copy()
    grid.sync_face(U)
    return AnelasticState(U=U, pi=np.zeros(tuple(grid.n)), t=t)


def neumann_elliptic_solve(grid, coeff, rhs, compat_tol=1e-10):
    """Solve div(coeff grad(pi)) = rhs with the natural (no-flux) boundary.

    coeff is a face field of positive conductivities; rhs lives on cells and
    must integrate to zero (checked against compat_tol, relatively).  The
    returned pi has zero volume mean.
    """
    n_cells = int(np.prod(grid.n))
    b = (grid.cell_volume * np.asarray(rhs)).ravel()
    imbalance = float(b.sum())
    gauge = float(np.abs(b).sum())
    if abs(imbalance) > compat_tol * max(1.0, gauge):
        raise ValueError(
            f"incompatible elliptic right-hand side: net source {imbalance:.6e}"
        )
    b = b - imbalance / n_cells

    rows, cols, vals = [], [], []
    for axis in range(grid.dim):
        Lidx, Ridx = grid.face_cells(axis)
        owned = grid.owned_mask(axis).ravel()
        interior = grid.interior_mask(axis).ravel()
        keep = owned & interior
        L = Lidx.ravel()[keep]
        R = Ridx.ravel()[keep]
        w = (grid.face_area[axis] / grid.h[axis]) * coeff[axis].ravel()[keep]
        rows.extend([L, L, R, R])
        cols.extend([R, L, L, R])
        vals.extend([w, -w, w, -w])
    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_cells, n_cells),
    ).tocsr()

    vol = np.full(n_cells, grid.cell_volume)
    M = sp.bmat(
        [[A, vol[:, None]], [vol[None, :], None]], format="csc"
    )
    sol = spla.spsolve(M, np.concatenate([b, [0.0]]))
    pi = sol[:n_cells].reshape(tuple(grid.n))
    return pi - pi.mean()


def stabilised_velocity(grid, hydro, U, dt, eta1):
    """(pi, U*) with div(rho_t U*) = 0; U* = U - eta dt grad(pi)."""
    eta = FaceField([eta1 / d for d in dual_average(grid, hydro.rho)])
    coeff = FaceField([dt * eta[i] * hydro.rho_face[i] for i in range(grid.dim)])
    rhs = discrete_divergence(grid, U, face_weight=hydro.rho_face)
    pi = neumann_elliptic_solve(grid, coeff, rhs)
    grad_pi = discrete_gradient(grid, pi)
    Ustar = FaceField([U[i] - dt * eta[i] * grad_pi[i] for i in range(grid.dim)])
    grid.sync_face(Ustar)
    return pi, Ustar, grad_pi


def project_divergence_free(grid, hydro, U):
    """Leray-type projection: remove the part of U with div(rho_t U) != 0."""
    pi, Ustar, _ = stabilised_velocity(grid, hydro, U, dt=1.0, eta1=1.0)
    return Ustar


def anelastic_dt(grid, U, cfl=0.45):
    """Advective step bound; the scheme has no acoustic restriction."""
    bound = np.inf
    for axis in range(grid.dim):
        vmax = float(np.max(np.abs(U[axis])))
        if vmax > 0.0:
            bound = min(bound, grid.h[axis] / vmax)
    return cfl * bound


def anelastic_step(grid, law, hydro, state, dt, eta1=2.0):
    """One projection-transport step; returns (state', info).

    info carries the constraint residual of the advecting field, which is
    the quantity the scheme controls each step.
    """
    pi, Ustar, grad_pi = stabilised_velocity(grid, hydro, state.U, dt, eta1)
    residual = discrete_divergence(grid, Ustar, face_weight=hydro.rho_face)
    F = FaceField(
        [grid.face_area[i] * hydro.rho_face[i] * Ustar[i] for i in range(grid.dim)]
    )
    conv = dual_convection(grid, dual_fluxes(grid, F), state.U)
    d_t = dual_average(grid, hydro.rho)
    U_new = state.U.copy()
    for axis in range(grid.dim):
        vol = grid.dual_volume(axis)
        mom = (
            d_t[axis] * state.U[axis]
            - dt * conv[axis] / vol
            - dt * hydro.rho_face[axis] * grad_pi[axis]
        )
        mask = grid.interior_mask(axis)
        U_new[axis][mask] = mom[mask] / d_t[axis][mask]
    grid.sync_face(U_new)
    info = {
        "constraint_residual": float(np.max(np.abs(residual))),
        "dt": dt,
    }
    return AnelasticState(U=U_new, pi=pi, t=state.t + dt), info


def run_anelastic(grid, law, hydro, state, t_end, eta1=2.0, cfl=0.45, dt_max=np.inf,
                  observer=None, max_steps=1_000_000):
    infos = []
    tiny = 1e-13 * max(1.0, abs(t_end))
    steps = 0
    while state.t < t_end - tiny:
        if steps >= max_steps:
            raise RuntimeError(f"step budget exhausted at t={state.t:.6g}")
        dt = min(anelastic_dt(grid, state.U, cfl), dt_max, t_end - state.t)
        if not np.isfinite(dt) or dt <= 0.0:
            # quiescent flow: nothing moves, jump to the end
            state = AnelasticState(state.U.copy(), state.pi.copy(), t_end)
            break
        state, info = anelastic_step(grid, law, hydro, state, dt, eta1)
        infos.append(info)
        if observer is not None:
            observer(state, info)
        steps += 1
    return state, infos


def ap_convergence_experiment(grid, law, hydro, initial_factory, eps_values, t_end,
                              params, observer=None):
    """Distance to the hydrostatic profile after t_end, per eps.

    initial_factory(eps) -> (rho0, u0) provides the eps-indexed well-prepared
    data.  Records, per eps: the final L1 distance of rho to rho_t, the scaled
    relative internal energy (1/eps^2) sum |K| Pi(rho|rho_t), and the L1 size
    of the velocity.  All three measure the departure from the anelastic
    manifold and should shrink with eps for well-prepared data.
    """
    records = []
    for eps in eps_values:
        p = replace(params, eps=eps)
        rho0, u0 = initial_factory(eps)
        state = make_state(grid, rho0, u0)
        state, reports = run(grid, law, state, hydro, p, t_end, observer=observer)
        pi_energy = float(
            grid.cell_volume
            * np.sum(relative_internal_energy(law, state.rho, hydro.rho, drho=state.drho))
        ) / eps**2
        vel = 0.0
        for axis in range(grid.dim):
            vol = grid.dual_volume(axis)
            owned = grid.owned_mask(axis)
            vel += float(np.sum((vol * np.abs(state.u[axis]))[owned]))
        records.append(
            {
                "eps": float(eps),
                "l1_rho": l1_error(grid, state.rho, hydro.rho),
                "pi_energy": pi_energy,
                "l1_velocity": vel,
                "steps": len(reports),
            }
        )
    return records
