"""Isentropic gas law, interface densities, and discrete hydrostatic states.

The pressure law is p = rho^gamma with gamma > 1.  Its Helmholtz potential
h(rho) = rho^gamma/(gamma-1) satisfies rho h'(rho) - h(rho) = p(rho), which
is what makes the interface density below work: the "gamma-mean" of two cell
densities is the unique value rho_s between them with

    p(rho_L) - p(rho_R) = rho_s * (h'(rho_L) - h'(rho_R)),

so the discrete pressure gradient factors as rho_s times the gradient of
h'(rho).  A hydrostatic state rho~ then balances exactly on the grid when
the cell potential is stored as phi_K = C - h'(rho~_K).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .grid import LO, HI, FaceField, _slc, dual_average

# series branch of the relative internal energy; see relative_internal_energy
_SERIES_CUT = 0.25
_SERIES_TERMS = 40


@dataclass(frozen=True)
class GasLaw:
    """Barotropic pressure law p(rho) = rho**gamma."""

    gamma: float

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError("gamma must exceed 1")

    def pressure(self, rho):
        rho = np.asarray(rho, dtype=float)
        if np.any(rho < 0):
            raise ValueError("pressure needs rho >= 0")
        return rho**self.gamma

    def helmholtz(self, rho):
        rho = np.asarray(rho, dtype=float)
        if np.any(rho < 0):
            raise ValueError("helmholtz needs rho >= 0")
        return rho**self.gamma / (self.gamma - 1.0)

    def helmholtz_prime(self, rho):
        rho = np.asarray(rho, dtype=float)
        if np.any(rho <= 0):
            raise ValueError("helmholtz_prime needs rho > 0")
        return self.gamma / (self.gamma - 1.0) * rho ** (self.gamma - 1.0)

    def helmholtz_second(self, rho):
        rho = np.asarray(rho, dtype=float)
        if np.any(rho <= 0):
            raise ValueError("helmholtz_second needs rho > 0")
        return self.gamma * rho ** (self.gamma - 2.0)

    def sound_speed(self, rho):
        rho = np.asarray(rho, dtype=float)
        if np.any(rho < 0):
            raise ValueError("sound_speed needs rho >= 0")
        return np.sqrt(self.gamma * rho ** (self.gamma - 1.0))


def relative_internal_energy(law, rho, rho_ref, drho=None):
    """Bregman distance h(rho) - h(ref) - h'(ref)(rho - ref), >= 0.

    For |rho - ref| <= 0.25 ref the direct formula loses all significant
    digits (the result is O((rho-ref)^2) while the terms are O(h)), so a
    binomial series in w = (rho-ref)/ref is used there; the two branches
    agree to ~1e-14 relative where they overlap.

    drho optionally supplies rho - rho_ref directly, for callers that track
    the increment to better than the spacing of rho's binade.
    """
    g = law.gamma
    rho = np.asarray(rho, dtype=float)
    rho_ref = np.asarray(rho_ref, dtype=float)
    if np.any(rho < 0) or np.any(rho_ref <= 0):
        raise ValueError("relative_internal_energy needs rho >= 0, rho_ref > 0")

    rho, rho_ref = np.broadcast_arrays(rho, rho_ref)
    if drho is None:
        w = (rho - rho_ref) / rho_ref
    else:
        w = np.broadcast_arrays(np.asarray(drho, dtype=float), rho_ref)[0] / rho_ref
    small = np.abs(w) <= _SERIES_CUT

    # series: h(ref) * sum_{k>=2} binom(g, k) w^k, Horner from the top
    coeff = np.empty(_SERIES_TERMS + 1)
    coeff[2] = g * (g - 1.0) / 2.0
    for k in range(2, _SERIES_TERMS):
        coeff[k + 1] = coeff[k] * (g - k) / (k + 1.0)
    ws = np.where(small, w, 0.0)
    poly = np.full_like(ws, coeff[_SERIES_TERMS])
    for k in range(_SERIES_TERMS - 1, 1, -1):
        poly = coeff[k] + ws * poly
    series = law.helmholtz(rho_ref) * ws * ws * poly

    direct = law.helmholtz(rho) - law.helmholtz(rho_ref) - law.helmholtz_prime(rho_ref) * (rho - rho_ref)
    return np.where(small, series, direct)


def helmholtz_prime_increment(law, drho, rho_ref):
    """h'(rho_ref + drho) - h'(rho_ref) without cancellation.

    Evaluated as h'(ref) expm1((g-1) log1p(drho/ref)), so the result keeps
    full relative accuracy however small the increment, and is exactly zero
    where drho is.  Direct subtraction of the two h' values would leave
    noise of order eps * h', which near hydrostatic states is orders of
    magnitude above the imbalance being measured.  Taking the increment
    itself (rather than two densities) also admits increments finer than
    the spacing of rho_ref's binade.
    """
    g = law.gamma
    drho = np.asarray(drho, dtype=float)
    rho_ref = np.asarray(rho_ref, dtype=float)
    if np.any(rho_ref <= 0) or np.any(drho <= -rho_ref):
        raise ValueError("helmholtz_prime_increment needs rho_ref > 0 and rho_ref + drho > 0")
    t = np.log1p(drho / rho_ref)
    return law.helmholtz_prime(rho_ref) * np.expm1((g - 1.0) * t)


def helmholtz_prime_difference(law, rho, rho_ref):
    """h'(rho) - h'(rho_ref) without cancellation; see helmholtz_prime_increment."""
    rho = np.asarray(rho, dtype=float)
    rho_ref = np.asarray(rho_ref, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("helmholtz_prime_difference needs positive densities")
    return helmholtz_prime_increment(law, rho - rho_ref, rho_ref)


def _gamma_mean_parts(law, a, b):
    """Shared setup: anchor at the smaller value and return (lo, t, Eg, Eq).

    t = log(hi/lo) >= 0 via log1p, Eg = expm1(g t), Eq = expm1(q t) with
    g = gamma, q = gamma - 1.  Everything is a few ulps accurate for any
    separation; only t == 0 (bit-equal arguments) needs a fallback.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("gamma mean needs positive densities")
    a, b = np.broadcast_arrays(a, b)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    t = np.log1p((hi - lo) / lo)
    Eg = np.expm1(law.gamma * t)
    Eq = np.expm1((law.gamma - 1.0) * t)
    return a, b, lo, t, Eg, Eq


def gamma_mean(law, a, b):
    """Interface density: the rho_s with p(a) - p(b) = rho_s (h'(a) - h'(b)).

    Evaluated as (q/g) lo expm1(g t)/expm1(q t) with t = log(hi/lo), which
    avoids the catastrophic cancellation of the ratio of differences when
    a ~ b.  Lies between min(a,b) and max(a,b); equals the arithmetic mean
    for gamma = 2.
    """
    g = law.gamma
    _, _, lo, t, Eg, Eq = _gamma_mean_parts(law, a, b)
    equal = t == 0.0
    ratio = np.where(equal, g / (g - 1.0), Eg / np.where(equal, 1.0, Eq))
    # bit-equal arguments return that value exactly (the rounded prefactor
    # product (q/g)(g/q) would shave an ulp off constant states)
    return np.where(equal, lo, (g - 1.0) / g * lo * ratio)


def _slope_parts(law, t, Eq):
    """R = D/Eq^2 and S = N/Eq^2 with Eq = expm1(q t) and
    D = e^{(g+q)t} - g e^{gt} + q e^{qt},  N = q e^{gt} - g e^{qt} + 1.

    Both numerators vanish to second order at t = 0 (leading terms
    g q t^2 / 2), so truncated Taylor series take over below |t| = 0.05;
    above it the direct forms are rescaled by e^{-2qt}, which caps every
    term at e^t = hi/lo and avoids the cancellation that made the naive
    forms lose all digits once hi/lo reached 1/eps.
    """
    g = law.gamma
    q = g - 1.0
    small = np.abs(t) < 0.05
    ts = np.where(small, t, 0.0)
    D_ser = np.zeros_like(t)
    N_ser = np.zeros_like(t)
    fact = 1.0
    for k in range(2, 25):
        fact *= k
        D_ser += ((g + q) ** k - g ** (k + 1) + q ** (k + 1)) / fact * ts**k
        N_ser += (q * g**k - g * q**k) / fact * ts**k
    Eq_safe = np.where(t == 0.0, 1.0, Eq)
    tb = np.where(small, 1.0, t)
    e_mq = np.exp(-q * tb)
    den = np.expm1(-q * tb) ** 2
    R_dir = (np.exp(tb) - g * np.exp((2.0 - g) * tb) + q * e_mq) / den
    S_dir = (q * np.exp((2.0 - g) * tb) - g * e_mq + e_mq**2) / den
    R = np.where(small, D_ser / Eq_safe**2, R_dir)
    S = np.where(small, N_ser / Eq_safe**2, S_dir)
    at0 = g / (2.0 * q)
    return np.where(t == 0.0, at0, R), np.where(t == 0.0, at0, S)


def gamma_mean_derivatives(law, a, b):
    """Partial derivatives of gamma_mean wrt its two arguments.

    With m = (q/g) lo Eg/Eq:
        dm/dhi = (q/g) (lo/hi) R,   dm/dlo = (q/g) S,
    where S = Eg/Eq - R collapses to the cancellation-free N of
    _slope_parts; mapped back to (a, b) by which argument is the smaller.
    Both tend to 1/2 as a -> b; dm/dlo grows like lo^{g-2} as lo -> 0
    when g < 2 (and is exactly 1/2 for g = 2).
    """
    g = law.gamma
    q = g - 1.0
    a, b, lo, t, _, Eq = _gamma_mean_parts(law, a, b)
    hi = np.maximum(a, b)
    R, S = _slope_parts(law, t, Eq)
    # bit-equal arguments: both slopes are exactly 1/2, not (q/g)(g/2q)
    equal = t == 0.0
    dm_dhi = np.where(equal, 0.5, (q / g) * (lo / hi) * R)
    dm_dlo = np.where(equal, 0.5, (q / g) * S)
    a_is_lo = a <= b
    dm_da = np.where(a_is_lo, dm_dlo, dm_dhi)
    dm_db = np.where(a_is_lo, dm_dhi, dm_dlo)
    return dm_da, dm_db


def hydrostatic_profile(law, C, phi_values):
    """rho~ = ((gamma-1)/gamma * (C - phi))**(1/(gamma-1)); needs C > phi."""
    g = law.gamma
    phi_values = np.asarray(phi_values, dtype=float)
    arg = (g - 1.0) / g * (C - phi_values)
    if np.any(arg <= 0):
        raise ValueError("hydrostatic profile needs C > phi everywhere")
    return arg ** (1.0 / (g - 1.0))


@dataclass
class HydrostaticState:
    """Discrete hydrostatic reference state on a grid.

    phi is stored as C - h'(rho), which makes the face-wise balance
    (grad p)_sigma + rho_sigma (grad phi)_sigma vanish identically with the
    gamma-mean interface density.  ghost holds profile values one layer
    outside each non-periodic side, keyed by (axis, side).
    """

    law: GasLaw
    C: float
    rho: np.ndarray
    p: np.ndarray
    phi: np.ndarray
    rho_face: FaceField
    ghost: dict = field(default_factory=dict)

    @property
    def balance(self):
        """h'(rho) + phi per cell.

        With phi stored as C - h'(rho) this evaluates to exactly C in every
        cell (the rounded subtraction is exact for the magnitudes involved),
        so its face differences vanish bit for bit.
        """
        return self.law.helmholtz_prime(self.rho) + self.phi

    def mass(self, grid):
        return grid.integrate_cells(self.rho)


def _cell_quadrature(grid, func, order):
    """Cell averages of func over tensor Gauss-Legendre points (order >= 1)."""
    if order == 1:
        return np.asarray(func(*grid.cell_center_mesh()), dtype=float)
    nodes, weights = np.polynomial.legendre.leggauss(order)
    pts = [grid.cell_centers(i)[:, None] + 0.5 * grid.h[i] * nodes[None, :] for i in range(grid.dim)]
    out = np.zeros(grid.n)
    if grid.dim == 1:
        for k in range(order):
            out += 0.5 * weights[k] * func(pts[0][:, k])
    else:
        for k in range(order):
            for l in range(order):
                xk = pts[0][:, k][:, None]
                yl = pts[1][:, l][None, :]
                out += 0.25 * weights[k] * weights[l] * func(xk + 0.0 * yl, yl + 0.0 * xk)
    return out


def hydrostatic_from_potential(grid, law, potential, C=None, quad_order=1):
    """Sample a hydrostatic state on the grid.

    potential is a callable of the meshed coordinates.  quad_order 1 samples
    cell midpoints (the default; keeps the profile/gamma-mean identity
    exact); higher orders average the profile over Gauss points, giving a
    genuinely cell-averaged rho~ at the cost of an O(h^2) shift in the
    compatible potential.
    """
    if C is None:
        C = law.gamma / (law.gamma - 1.0)
    phi_pointwise = _cell_quadrature(grid, potential, 1)
    if quad_order == 1:
        rho = hydrostatic_profile(law, C, phi_pointwise)
    else:
        rho = _cell_quadrature(grid, lambda *xs: hydrostatic_profile(law, C, potential(*xs)), quad_order)
    # compatible potential: exact discrete balance regardless of sampling
    phi = C - law.helmholtz_prime(rho)
    p = law.pressure(rho)

    rho_face = dual_average(grid, rho)  # placeholder shape; overwrite interior
    nd = grid.dim
    for axis in range(nd):
        a = rho_face[axis]
        lo = rho[_slc(nd, axis, slice(None, -1))]
        hi = rho[_slc(nd, axis, slice(1, None))]
        a[_slc(nd, axis, slice(1, -1))] = gamma_mean(law, lo, hi)
        if grid.bc.is_periodic(axis):
            wrap = gamma_mean(law, rho[_slc(nd, axis, -1)], rho[_slc(nd, axis, 0)])
            a[_slc(nd, axis, 0)] = wrap
            a[_slc(nd, axis, -1)] = wrap

    ghost = {}
    for axis in range(nd):
        if grid.bc.is_periodic(axis):
            continue
        for side in (LO, HI):
            coords = []
            x_out = (
                grid.origin[axis] - 0.5 * grid.h[axis]
                if side == LO
                else grid.origin[axis] + grid.lengths[axis] + 0.5 * grid.h[axis]
            )
            for j in range(nd):
                coords.append(np.array([x_out]) if j == axis else grid.cell_centers(j))
            mesh = np.meshgrid(*coords, indexing="ij")
            phi_g = np.squeeze(np.asarray(potential(*mesh), dtype=float), axis=axis)
            rho_g = hydrostatic_profile(law, C, phi_g)
            ghost[(axis, side)] = {
                "rho": rho_g,
                "phi": C - law.helmholtz_prime(rho_g),
                "p": law.pressure(rho_g),
            }
    return HydrostaticState(law=law, C=C, rho=rho, p=p, phi=phi, rho_face=rho_face, ghost=ghost)


def calibrate_constant(grid, law, potential, target_mass, quad_order=1):
    """Find C so the hydrostatic state carries the given total mass."""
    if target_mass <= 0:
        raise ValueError("target mass must be positive")
    phi_max = float(np.max(_cell_quadrature(grid, potential, max(quad_order, 1))))

    def mass_of(C):
        # ghost centroids sit outside the domain, so C barely above the
        # interior maximum can still be vacuum-invalid there; count such C
        # as carrying no mass and let the bracket grow past them
        try:
            hs = hydrostatic_from_potential(grid, law, potential, C=C, quad_order=quad_order)
        except ValueError:
            return -target_mass
        return hs.mass(grid) - target_mass

    lo = phi_max + 1e-9
    hi = phi_max + 1.0
    while mass_of(hi) < 0:
        hi = phi_max + 2.0 * (hi - phi_max)
        if hi - phi_max > 1e12:
            raise ValueError("could not bracket the mass constant")
    if mass_of(lo) > 0:
        raise ValueError("target mass below the vacuum limit of this potential")
    return float(brentq(mass_of, lo, hi, xtol=1e-14, rtol=8.9e-16))
