"""Explicit colocated Rusanov scheme, the non-well-balanced reference.

Conserved variables (rho, m) live at cell centres.  Fluxes use the local
Lax-Friedrichs dissipation with wave speed |u| + c/eps, gravity enters as a
centred source, and the step obeys the acoustic CFL condition, so the cost
and the pressure noise both blow up as eps shrinks.  That failure mode is
the point: it is the behaviour the stabilised scheme is measured against.

A manufactured momentum source can be injected for accuracy tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import HI, LO, PERIODIC, STEADY, TRANSMISSIVE, WALL, _slc


class SchemeCrash(Exception):
    """Explicit scheme produced a non-positive or non-finite state."""

    def __init__(self, message, t, n_steps):
        super().__init__(message)
        self.t = t
        self.n_steps = n_steps


@dataclass
class ColocatedState:
    rho: np.ndarray
    m: tuple
    t: float = 0.0

    def copy(self):
        return ColocatedState(self.rho.copy(), tuple(mi.copy() for mi in self.m), self.t)

    def velocity(self, axis):
        return self.m[axis] / self.rho


def make_colocated_state(grid, rho, velocities=None, t=0.0):
    rho = np.ascontiguousarray(np.broadcast_to(np.asarray(rho, dtype=float), tuple(grid.n)))
    if velocities is None:
        m = tuple(np.zeros_like(rho) for _ in range(grid.dim))
    else:
        m = tuple(
            np.ascontiguousarray(np.broadcast_to(np.asarray(v, dtype=float), rho.shape)) * rho
            for v in velocities
        )
    return ColocatedState(rho=rho.copy(), m=m, t=t)


def _ghost_slab(grid, axis, side, rho, m, phi, hydro):
    """One-layer ghost values (rho, m list, phi) outside the given side."""
    nd = grid.dim
    edge = _slc(nd, axis, slice(0, 1) if side == LO else slice(-1, None))
    tag = grid.bc.tag(axis, side)
    if tag == PERIODIC:
        src = _slc(nd, axis, slice(-1, None) if side == LO else slice(0, 1))
        return rho[src], [mi[src] for mi in m], phi[src]
    if tag == TRANSMISSIVE:
        return rho[edge], [mi[edge] for mi in m], phi[edge]
    if tag == WALL:
        mg = [(-mi[edge] if j == axis else mi[edge]) for j, mi in enumerate(m)]
        return rho[edge], mg, phi[edge]
    # prescribed hydrostatic exterior
    if hydro is None:
        raise ValueError("steady boundaries need a hydrostatic reference state")
    g = hydro.ghost[(axis, side)]
    rho_g = np.expand_dims(np.broadcast_to(g["rho"], rho[edge].squeeze(axis=axis).shape), axis)
    phi_g = np.expand_dims(np.broadcast_to(g["phi"], rho[edge].squeeze(axis=axis).shape), axis)
    return rho_g, [np.zeros_like(rho_g) for _ in m], phi_g


def _padded(grid, axis, state, phi, hydro):
    rho, m = state.rho, state.m
    r_lo, m_lo, p_lo = _ghost_slab(grid, axis, LO, rho, m, phi, hydro)
    r_hi, m_hi, p_hi = _ghost_slab(grid, axis, HI, rho, m, phi, hydro)
    rho_e = np.concatenate([r_lo, rho, r_hi], axis=axis)
    m_e = [np.concatenate([a, mi, b], axis=axis) for a, mi, b in zip(m_lo, m, m_hi)]
    phi_e = np.concatenate([p_lo, phi, p_hi], axis=axis)
    return rho_e, m_e, phi_e


def max_signal_speed(law, state, eps, axis):
    c = law.sound_speed(state.rho)
    return float(np.max(np.abs(state.m[axis] / state.rho) + c / eps))


def compute_dt_rusanov(grid, law, state, eps, cfl):
    denom = 0.0
    for axis in range(grid.dim):
        denom += max_signal_speed(law, state, eps, axis) / grid.h[axis]
    if denom <= 0.0:
        return np.inf
    return cfl / denom


def step_rusanov(grid, law, state, phi, eps, cfl=0.45, hydro=None,
                 momentum_source=None, dt_limit=None):
    """One explicit update; raises SchemeCrash on breakdown."""
    nd = grid.dim
    dt = compute_dt_rusanov(grid, law, state, eps, cfl)
    if dt_limit is not None:
        dt = min(dt, dt_limit)
    if not np.isfinite(dt) or dt <= 0.0:
        raise SchemeCrash("no admissible time step", state.t, 0)

    rho_new = state.rho.copy()
    m_new = [mi.copy() for mi in state.m]
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for axis in range(nd):
            rho_e, m_e, phi_e = _padded(grid, axis, state, phi, hydro)
            u_e = m_e[axis] / rho_e
            p_e = law.pressure(rho_e) / eps**2
            lam_e = np.abs(u_e) + law.sound_speed(rho_e) / eps

            def faces(q):
                return (
                    q[_slc(nd, axis, slice(None, -1))],
                    q[_slc(nd, axis, slice(1, None))],
                )

            lamL, lamR = faces(lam_e)
            lam = np.maximum(lamL, lamR)
            rhoL, rhoR = faces(rho_e)
            uL, uR = faces(u_e)
            pL, pR = faces(p_e)

            flux_rho = 0.5 * (rhoL * uL + rhoR * uR) - 0.5 * lam * (rhoR - rhoL)
            rho_new -= (dt / grid.h[axis]) * np.diff(flux_rho, axis=axis)
            for j in range(nd):
                mjL, mjR = faces(m_e[j])
                f = 0.5 * (mjL * uL + mjR * uR) - 0.5 * lam * (mjR - mjL)
                if j == axis:
                    f = f + 0.5 * (pL + pR)
                m_new[j] -= (dt / grid.h[axis]) * np.diff(f, axis=axis)

            # centred gravity source on the momentum along this axis
            lo = phi_e[_slc(nd, axis, slice(None, -2))]
            hi = phi_e[_slc(nd, axis, slice(2, None))]
            m_new[axis] -= dt * state.rho * (hi - lo) / (2.0 * grid.h[axis] * eps**2)

        if momentum_source is not None:
            src = momentum_source(grid, state.t, dt)
            for j in range(nd):
                m_new[j] += dt * src[j]

    bad = (
        np.min(rho_new) <= 0.0
        or not np.all(np.isfinite(rho_new))
        or any(not np.all(np.isfinite(mj)) for mj in m_new)
    )
    new_state = ColocatedState(rho=rho_new, m=tuple(m_new), t=state.t + dt)
    if bad:
        raise SchemeCrash(
            f"explicit scheme broke down at t={state.t:.6g}", state.t, 1
        )
    return new_state, dt


def run_rusanov(grid, law, state, phi, eps, t_end, cfl=0.45, hydro=None,
                momentum_source=None, observer=None, max_steps=5_000_000):
    """Advance to t_end; SchemeCrash propagates with the failure time."""
    steps = 0
    tiny = 1e-13 * max(1.0, abs(t_end))
    while state.t < t_end - tiny:
        if steps >= max_steps:
            raise SchemeCrash(f"step budget exhausted at t={state.t:.6g}", state.t, steps)
        try:
            state, dt = step_rusanov(
                grid, law, state, phi, eps, cfl, hydro, momentum_source,
                dt_limit=t_end - state.t,
            )
        except SchemeCrash as exc:
            raise SchemeCrash(str(exc), exc.t, steps + exc.n_steps) from None
        steps += 1
        if observer is not None:
            observer(state, dt)
    return state, steps
