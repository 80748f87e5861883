"""Semi-implicit, velocity-stabilised scheme for barotropic flow with gravity.

Each step solves the stabilised mass balance implicitly in the density
(Newton on the cell densities, with the interface gamma-means linearised
exactly), then updates the face velocities explicitly with dual-cell
convection and the implicit pressure/gravity imbalance:

    (rho^{n+1} - rho^n)/dt + div( rho_s (u^n - delta_u(rho^{n+1})) ) = 0
    (rhoD^{n+1} u^{n+1} - rhoD^n u^n)/dt
        + dual convection of rho^{n+1}-fluxes upwinding u^n
        + (1/eps^2) rho_s^{n+1} grad(h'(rho^{n+1}) + phi) = 0

The stiff term is evaluated in the factored form rho_s * grad(h'(rho)+phi),
and the face difference of h'(rho) + phi is assembled relative to the
hydrostatic background: d(h'(rho) - h'(rho~)) + d(h'(rho~) + phi), with the
first difference computed cancellation-free.  A discrete hydrostatic state
then gives a bit-exact zero residual (the Newton solve freezes and the state
is reproduced unchanged), and near-hydrostatic imbalances keep full relative
accuracy instead of drowning in eps * |h'| rounding, which matters once the
stiffness dt/(eps^2 h) amplifies that noise above any sane Newton tolerance.

For the same reason the Newton solve and the conservative finalisation work
in the perturbation drho = rho - rho~ rather than in rho itself: near a
hydrostatic state the update would otherwise be limited by the spacing of
rho's binade, and the quantisation error, amplified by dt/(eps^2 h) in the
velocity update, can exceed the physical signal by orders of magnitude.
States carry the perturbation alongside rho (rho = rho~ + drho, rounded);
whenever it is missing it is recovered by subtraction, which is exact as
long as rho stays within a factor two of the background.

Stability requires eta1 > 3/2 and the time step restriction enforced by
compute_dt; both are sufficient conditions for the discrete energy
inequality, not sharp thresholds.
"""

from __future__ import annotations

from dataclasses import dataclass

import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .diagnostics import energy_breakdown
from .fluxes import dual_convection, dual_fluxes, dual_inflow, interface_density, pad_cells_axis
from .grid import FaceField, HI, LO, STEADY, WALL, _slc, dual_average
from .thermo import gamma_mean, gamma_mean_derivatives, helmholtz_prime_increment

_log = logging.getLogger(__name__)


class SolverFailure(Exception):
    """Unrecoverable failure of the time stepper."""


class NewtonFailure(SolverFailure):
    """Newton iteration on the mass update did not converge."""


class StepRejected(SolverFailure):
    """A computed step violated an a-posteriori stability condition."""


@dataclass(frozen=True)
class SchemeParams:
    """Knobs of the semi-implicit scheme.

    eps is the scaled sound-speed parameter (Mach scaling); eta1 > 3/2 sets
    the stabilisation strength via eta_sigma = eta1 / rhoD^n.

    density_ratio_cap keeps the min(1, mu/3) factor in the time-step bound.
    The factor is only a sufficient condition for the energy inequality, and
    it collapses dt to zero once cells empty out; runs that form vacuum turn
    it off and rely on the Newton positivity safeguard instead.

    vacuum_floor > 0 clamps cell densities from below.  The interface
    density of the mass flux does not vanish with the emptier cell, so a
    cell under strong expansion reaches zero in finite time and no time
    step keeps it positive; the clamp trades a little spurious mass (on
    open domains only, where mass is not conserved anyway) for bounded
    ratios.  Zero means strict positivity, the default.
    """

    eps: float = 1.0
    eta1: float = 2.0
    cfl_safety: float = 0.9
    dt_max: float = np.inf
    newton_tol: float = 1e-12
    newton_max_iter: int = 20
    newton_polish: bool = True
    max_dt_retries: int = 5
    density_ratio_cap: bool = True
    vacuum_floor: float = 0.0

    def __post_init__(self):
        if not self.eps > 0.0:
            raise ValueError("eps must be positive")
        if not self.eta1 > 1.5:
            raise ValueError("eta1 must exceed 3/2")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if not self.dt_max > 0.0:
            raise ValueError("dt_max must be positive")
        if self.vacuum_floor < 0.0:
            raise ValueError("vacuum_floor must be non-negative")


@dataclass
class FluidState:
    """Cell densities and face velocities at one time level.

    drho optionally tracks rho - rho~ against the hydrostatic background to
    full precision; the stepper maintains it (and relies on it in the stiff
    regime) but states without it are accepted everywhere.
    """

    rho: np.ndarray
    u: FaceField
    t: float = 0.0
    drho: np.ndarray | None = None

    def copy(self):
        drho = None if self.drho is None else self.drho.copy()
        return FluidState(self.rho.copy(), self.u.copy(), self.t, drho)


@dataclass
class StepReport:
    t: float
    dt: float
    newton_iters: int
    newton_residual: float
    frozen: bool
    dt_retries: int
    min_rho: float
    energy_before: float
    energy_after: float


def make_state(grid, rho, u=None, t=0.0, drho=None):
    rho = np.ascontiguousarray(np.broadcast_to(np.asarray(rho, dtype=float), tuple(grid.n)))
    if np.any(rho <= 0.0) or not np.all(np.isfinite(rho)):
        raise ValueError("initial density must be finite and positive")
    if drho is not None:
        drho = np.ascontiguousarray(
            np.broadcast_to(np.asarray(drho, dtype=float), tuple(grid.n))
        ).copy()
    if u is None:
        u = FaceField.zeros(grid)
    else:
        u = u.copy()
    grid.sync_face(u)
    return FluidState(rho=rho.copy(), u=u, t=t, drho=drho)


def _perturbation(state, hydro):
    """rho - rho~ of a state, tracked if available, else by subtraction."""
    if state.drho is not None:
        return state.drho
    return state.rho - hydro.rho


def choose_eta(grid, rho, params):
    """Face stabilisation weight eta_sigma = eta1 / rhoD^n."""
    d = dual_average(grid, rho)
    return FaceField([params.eta1 / d[i] for i in range(grid.dim)])


def _face_imbalance(grid, W, balance, axis):
    """Undivided face difference of h'(rho) + phi along one axis.

    Assembled as d(W) + d(balance) so the two differences cancel separately:
    W = h'(rho) - h'(rho~) is small near hydrostatic states and balance is
    exactly constant for a compatible background.  Non-periodic exterior
    faces carry no imbalance by construction.
    """
    nd = grid.dim
    dG = np.diff(pad_cells_axis(grid, W, axis), axis=axis)
    dG += np.diff(pad_cells_axis(grid, balance, axis), axis=axis)
    if not grid.bc.is_periodic(axis):
        dG[_slc(nd, axis, 0)] = 0.0
        dG[_slc(nd, axis, -1)] = 0.0
    return dG


def compute_dt(grid, law, state, hydro, eta, params):
    """Largest dt satisfying the sufficient stability bound at state^n.

    Per face: dt * (2 sum_i 1/h_i) * (|u| + sqrt(eta rho_s |dG|)/eps)
              <= min(1, mu/3),  mu = min(rhoK,rhoL)/max(rhoK,rhoL),
    with dG the undivided face difference of h'(rho) + phi.  The mu/3
    factor is skipped when params.density_ratio_cap is off (vacuum runs).
    """
    rho = state.rho
    W = helmholtz_prime_increment(law, _perturbation(state, hydro), hydro.rho)
    balance = hydro.balance
    nd = grid.dim
    P = grid.perimeter_ratio
    best = np.inf
    for axis in range(nd):
        ext_rho = pad_cells_axis(grid, rho, axis)
        L = ext_rho[_slc(nd, axis, slice(None, -1))]
        R = ext_rho[_slc(nd, axis, slice(1, None))]
        rho_f = gamma_mean(law, L, R)
        dG = _face_imbalance(grid, W, balance, axis)
        term = np.abs(state.u[axis]) + np.sqrt(eta[axis] * rho_f * np.abs(dG)) / params.eps
        if params.density_ratio_cap:
            mu = np.minimum(L, R) / np.maximum(L, R)
            cap = np.minimum(1.0, mu / 3.0)
        else:
            cap = 1.0
        with np.errstate(divide="ignore"):
            bound = np.where(term > 0.0, cap / (P * term), np.inf)
        owned = grid.owned_mask(axis)
        axis_min = bound[owned].min() if bound[owned].size else np.inf
        best = min(best, float(axis_min))
    return min(params.cfl_safety * best, params.dt_max)


def _flux_system(grid, law, drho, hydro, u, eta, dt, eps, need_jac):
    """Primal fluxes F(rho~ + drho) and, optionally, their derivatives.

    The density enters as its perturbation against the background so the
    imbalance keeps sub-rounding accuracy; the smooth factors (gamma-means,
    h'') use the rounded sum.  Returns (F, delta_u, jac) where jac[axis] =
    (dfL, dfR) are the per-face derivatives of the total flux with respect
    to the left/right padded cell value (ghost copies fold onto the edge
    cell); the derivatives in drho and in rho coincide.
    """
    nd = grid.dim
    rho = hydro.rho + drho
    W = helmholtz_prime_increment(law, drho, hydro.rho)
    balance = hydro.balance
    F_comps = []
    du_comps = []
    jac = []
    for axis in range(nd):
        area = grid.face_area[axis]
        ext_rho = pad_cells_axis(grid, rho, axis)
        L = ext_rho[_slc(nd, axis, slice(None, -1))]
        R = ext_rho[_slc(nd, axis, slice(1, None))]
        m = gamma_mean(law, L, R)
        dG = _face_imbalance(grid, W, balance, axis)
        c = (dt / eps**2) * eta[axis] / grid.h[axis]
        delta_u = c * m * dG
        f = area * m * (u[axis] - delta_u)
        wall_lo = wall_hi = False
        if not grid.bc.is_periodic(axis):
            wall_lo = grid.bc.tag(axis, LO) in (WALL, STEADY)
            wall_hi = grid.bc.tag(axis, HI) in (WALL, STEADY)
            if wall_lo:
                f[_slc(nd, axis, 0)] = 0.0
            if wall_hi:
                f[_slc(nd, axis, -1)] = 0.0
        F_comps.append(f)
        du_comps.append(delta_u)
        if need_jac:
            dmL, dmR = gamma_mean_derivatives(law, L, R)
            hppL = law.helmholtz_second(L)
            hppR = law.helmholtz_second(R)
            dfL = area * (dmL * u[axis] - c * (2.0 * m * dmL * dG - m * m * hppL))
            dfR = area * (dmR * u[axis] - c * (2.0 * m * dmR * dG + m * m * hppR))
            if wall_lo:
                dfL[_slc(nd, axis, 0)] = 0.0
                dfR[_slc(nd, axis, 0)] = 0.0
            if wall_hi:
                dfL[_slc(nd, axis, -1)] = 0.0
                dfR[_slc(nd, axis, -1)] = 0.0
            jac.append((dfL, dfR))
        else:
            jac.append(None)
    return FaceField(F_comps), FaceField(du_comps), jac


def _flux_divergence(grid, F):
    div = np.zeros(tuple(grid.n))
    for axis in range(grid.dim):
        div += np.diff(F[axis], axis=axis)
    return div / grid.cell_volume


def _assemble_jacobian(grid, jac, dt):
    n_cells = int(np.prod(grid.n))
    rows = [np.arange(n_cells)]
    cols = [np.arange(n_cells)]
    vals = [np.ones(n_cells)]
    w = dt / grid.cell_volume
    for axis in range(grid.dim):
        Lidx, Ridx = grid.face_cells(axis)
        owned = grid.owned_mask(axis).ravel()
        L = Lidx.ravel()[owned]
        R = Ridx.ravel()[owned]
        dfL = jac[axis][0].ravel()[owned] * w
        dfR = jac[axis][1].ravel()[owned] * w
        diffL = np.where(L >= 0, L, R)
        diffR = np.where(R >= 0, R, L)
        # face flux leaves the right cell and enters the left one
        mL = L >= 0
        rows.extend([L[mL], L[mL]])
        cols.extend([diffL[mL], diffR[mL]])
        vals.extend([dfL[mL], dfR[mL]])
        mR = R >= 0
        rows.extend([R[mR], R[mR]])
        cols.extend([diffL[mR], diffR[mR]])
        vals.extend([-dfL[mR], -dfR[mR]])
    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_cells, n_cells),
    )
    return A.tocsc()


def newton_mass_update(grid, law, state, hydro, eta, dt, params):
    """Implicit mass update; returns (rho_new, drho_new, fluxes, delta_u, iters, res, frozen).

    The converged iterate only defines the fluxes; the new density is then
    obtained by applying them conservatively, so total mass and the
    dual-density balance hold to round-off regardless of the Newton
    tolerance.  The iteration runs in the perturbation drho = rho - rho~
    (the Jacobian is the same): near equilibrium the residual of the best
    representable rho sits at |J| * ulp(rho), far above both the tolerance
    and the imbalances the velocity update must see, while in drho the
    floor drops to the evaluation noise of the fluxes themselves.  A state
    whose initial residual is exactly zero (hydrostatic equilibria, uniform
    translation) is returned unchanged, fluxes and all.

    With params.vacuum_floor > 0 the iteration is projected onto densities
    above the floor: clamped cells are free to violate the mass balance in
    the draining direction (complementarity), which is what lets runs step
    through vacuum formation.
    """
    q_n = _perturbation(state, hydro)
    scale = float(np.max(state.rho))
    floor_q = params.vacuum_floor - hydro.rho if params.vacuum_floor > 0.0 else None
    q = q_n if floor_q is None else np.maximum(q_n, floor_q)

    def residual(qk, need_jac):
        F, du, jac = _flux_system(grid, law, qk, hydro, state.u, eta, dt, params.eps, need_jac)
        G = (qk - q_n) + dt * _flux_divergence(grid, F)
        Gm = G if floor_q is None else np.where((qk <= floor_q) & (G > 0.0), 0.0, G)
        return float(np.max(np.abs(Gm))) / scale, G, F, du, jac

    res, G, F, du, jac = residual(q, need_jac=True)
    if res == 0.0:
        return state.rho.copy(), q.copy(), F, du, 0, 0.0, True

    def take_step(qk, Gk, jk):
        A = _assemble_jacobian(grid, jk, dt)
        delta = spla.spsolve(A, -Gk.ravel()).reshape(qk.shape)
        if floor_q is not None:
            return np.maximum(qk + delta, floor_q)
        alpha = 1.0
        while np.min(hydro.rho + (qk + alpha * delta)) <= 0.0:
            alpha *= 0.5
            if alpha < 1e-8:
                raise NewtonFailure("positivity damping collapsed")
        return qk + alpha * delta

    iters = 0
    stalled = False
    floor_step = 64.0 * np.finfo(float).eps
    while res > params.newton_tol:
        if iters >= params.newton_max_iter:
            raise NewtonFailure(f"no convergence in {iters} iterations (residual {res:.3e})")
        q_next = take_step(q, G, jac)
        moved = float(np.max(np.abs(q_next - q))) / scale
        res2, G2, F2, du2, jac2 = residual(q_next, need_jac=True)
        iters += 1
        if res2 >= res and moved <= floor_step:
            # the correction is at round-off scale and the residual is not
            # improving: the iterate already solves the update to working
            # precision, the tolerance just sits below the evaluation floor
            stalled = True
            break
        q, res, G, F, du, jac = q_next, res2, G2, F2, du2, jac2

    if params.newton_polish and not stalled:
        # push the residual to its round-off floor; it tightens the energy
        # and balance identities that hold exactly for the implicit solution
        for _ in range(2):
            if res <= 5e-16:
                break
            prev = (q, res, F, du)
            try:
                q = take_step(q, G, jac)
            except NewtonFailure:
                q, res, F, du = prev
                break
            res, G, F, du, jac = residual(q, need_jac=True)
            iters += 1
            if res >= prev[1]:
                q, res, F, du = prev
                break
            if res > prev[1] / 4.0:
                break

    drho_new = q_n - dt * _flux_divergence(grid, F)
    if floor_q is not None:
        drho_new = np.maximum(drho_new, floor_q)
    rho_new = hydro.rho + drho_new
    if np.min(rho_new) <= 0.0 or not np.all(np.isfinite(rho_new)):
        raise NewtonFailure("flux application left a non-positive density")
    return rho_new, drho_new, F, du, iters, res, False


def check_energy_conditions(grid, fluxes, rho_new, eta, dt):
    """A-posteriori hypotheses of the discrete energy inequality.

    On interior dual cells: eta_sigma * rhoD^{n+1} >= 1, and the incoming
    dual flux must satisfy dt * inflow <= |D| rhoD^{n+1} / 2.  The explicit
    bound of compute_dt only sees level-n data; near a hydrostatic state it
    can admit a dt whose implicitly generated stabilisation fluxes break
    these.  On wall/steady domains callers redo the step with a smaller dt
    when they fail; elsewhere a failure is only informative.  Returns the
    worst inflow fraction (<= 1/2 when admissible).
    """
    d_new = dual_average(grid, rho_new)
    infl = dual_inflow(grid, dual_fluxes(grid, fluxes))
    worst = 0.0
    for axis in range(grid.dim):
        sel = grid.interior_mask(axis) & grid.owned_mask(axis)
        if not np.all((eta[axis] * d_new[axis])[sel] >= 1.0):
            raise StepRejected("stabilisation weight fell below 1/rhoD at the new state")
        frac = dt * infl[axis] / (grid.dual_volume(axis) * d_new[axis])
        worst = max(worst, float(frac[sel].max()) if frac[sel].size else 0.0)
        if worst > 0.5:
            raise StepRejected("dual-cell inflow exceeded half the dual mass")
    return worst


def velocity_update(grid, law, state, rho_new, fluxes, hydro, dt, params, drho_new=None):
    """Explicit momentum update on interior faces, then boundary sync.

    drho_new should be the perturbation the mass update produced; deriving
    it here by subtraction is exact only down to the rounding of rho_new,
    which the stiff prefactor dt/eps^2 then amplifies.

    With a vacuum floor active, a face whose upwind donor cell sits at the
    floor gets velocity zero: nothing can leave an empty cell (the gamma
    mean interface density would otherwise keep draining it at the fuller
    neighbour's scale), and faces between empty cells would otherwise
    amplify round-off of the convection term through the tiny dual mass.
    Inflow into empty cells is untouched.
    """
    nd = grid.dim
    if drho_new is None:
        drho_new = rho_new - hydro.rho
    d_old = dual_average(grid, state.rho)
    d_new = dual_average(grid, rho_new)
    conv = dual_convection(grid, dual_fluxes(grid, fluxes), state.u)
    W_new = helmholtz_prime_increment(law, drho_new, hydro.rho)
    balance = hydro.balance
    rho_face_new = interface_density(grid, law, rho_new)
    u_new = state.u.copy()
    for axis in range(nd):
        dG = _face_imbalance(grid, W_new, balance, axis) / grid.h[axis]
        imb = rho_face_new[axis] * dG
        vol = grid.dual_volume(axis)
        mom = d_old[axis] * state.u[axis] - dt * conv[axis] / vol - (dt / params.eps**2) * imb
        mask = grid.interior_mask(axis)
        u_new[axis][mask] = mom[mask] / d_new[axis][mask]
        if params.vacuum_floor > 0.0:
            empty = pad_cells_axis(grid, rho_new <= 4.0 * params.vacuum_floor, axis)
            left = empty[_slc(nd, axis, slice(None, -1))]
            right = empty[_slc(nd, axis, slice(1, None))]
            uax = u_new[axis]
            drain = ((uax > 0.0) & left) | ((uax < 0.0) & right)
            uax[mask & drain] = 0.0
    grid.sync_face(u_new)
    return u_new


def step(grid, law, state, hydro, params, dt_limit=None):
    """One full step; halves dt and retries if the mass update fails.

    dt_limit, when given, is the remaining time to the target: the step size
    divides it evenly (remaining / ceil(remaining / bound)) instead of
    clipping the last step.  On quasi-stationary states the density relaxes
    to a dt-dependent numerical equilibrium (the stabilisation flux offsets
    the O(h^2) convective divergence residual), and an abruptly shorter
    final step breaks that cancellation for one step, imprinting an
    eps-independent density kick that dominates fine-mesh errors; keeping
    the trailing steps uniform removes it.

    The a-posteriori energy conditions are enforced (reject and retry) only
    on wall/steady-bounded domains, where the energy inequality is claimed;
    on open or periodic domains violations are merely logged.
    """
    eta = choose_eta(grid, state.rho, params)
    dt = compute_dt(grid, law, state, hydro, eta, params)
    if dt_limit is not None and dt_limit < np.inf:
        m = max(1, int(np.ceil(dt_limit / dt - 1e-12)))
        dt = dt_limit / m
    if not np.isfinite(dt) or dt <= 0.0:
        raise SolverFailure(f"no admissible time step (dt={dt})")
    enforce = all(
        grid.bc.tag(axis, side) in (WALL, STEADY)
        for axis in range(grid.dim)
        for side in (LO, HI)
    )
    retries = 0
    while True:
        try:
            rho_new, drho_new, F, _, iters, res, frozen = newton_mass_update(
                grid, law, state, hydro, eta, dt, params
            )
            if not frozen and enforce:
                check_energy_conditions(grid, F, rho_new, eta, dt)
            break
        except (NewtonFailure, StepRejected) as exc:
            retries += 1
            if retries > params.max_dt_retries:
                raise SolverFailure(
                    f"step failed after {retries - 1} dt halvings at t={state.t:.6g}: {exc}"
                ) from None
            dt *= 0.5
    if not frozen and not enforce:
        try:
            check_energy_conditions(grid, F, rho_new, eta, dt)
        except StepRejected as exc:
            _log.debug("energy conditions not met at t=%.6g (dt=%.3e): %s", state.t, dt, exc)
    u_new = velocity_update(grid, law, state, rho_new, F, hydro, dt, params, drho_new=drho_new)
    new_state = FluidState(rho=rho_new, u=u_new, t=state.t + dt, drho=drho_new)
    e_before = energy_breakdown(grid, law, state, hydro.rho, params.eps)
    e_after = energy_breakdown(grid, law, new_state, hydro.rho, params.eps)
    report = StepReport(
        t=new_state.t,
        dt=dt,
        newton_iters=iters,
        newton_residual=res,
        frozen=frozen,
        dt_retries=retries,
        min_rho=float(rho_new.min()),
        energy_before=e_before.total,
        energy_after=e_after.total,
    )
    return new_state, report


def run(grid, law, state, hydro, params, t_end, observer=None, max_steps=10_000_000):
    """Advance to t_end (trailing steps divide the remainder evenly)."""
    reports = []
    tiny = 1e-13 * max(1.0, abs(t_end))
    steps = 0
    while state.t < t_end - tiny:
        if steps >= max_steps:
            raise SolverFailure(f"step budget exhausted at t={state.t:.6g}")
        state, rep = step(grid, law, state, hydro, params, dt_limit=t_end - state.t)
        if rep.dt < 1e-15 * max(1.0, t_end):
            raise SolverFailure(f"time step collapsed at t={state.t:.6g}")
        reports.append(rep)
        if observer is not None:
            observer(state, rep)
        steps += 1
    return state, reports
