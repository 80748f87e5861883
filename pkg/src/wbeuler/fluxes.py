"""Primal mass fluxes, stabilisation velocity, and dual-cell fluxes.

The primal mass flux through an axis-i face is

    F_sigma = |sigma| rho_sigma (u_sigma - delta_u_sigma),

stored as the +axis component, with rho_sigma the gamma-mean interface
density and delta_u the pressure/gravity stabilisation

    delta_u_sigma = (eta dt / eps^2) [ (grad p)_sigma + rho_sigma (grad phi)_sigma ]
                  = (eta dt / eps^2) rho_sigma (grad (h'(rho) + phi))_sigma.

The second, factored form is the one computed: it is algebraically identical
(that is what the gamma-mean is for) and vanishes bit-exactly on discrete
hydrostatic states, where h'(rho) + phi is one constant.

Dual fluxes redistribute the primal fluxes onto the diamond cells around
faces so that the dual mass balance is an exact linear combination of the
primal one: the dual face at a cell centre carries the mean of that cell's
two primal fluxes of the same axis, and a transverse dual face carries the
mean of the two adjacent transverse primal fluxes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import HI, LO, PERIODIC, STEADY, TRANSMISSIVE, WALL, FaceField, _slc
from .thermo import gamma_mean


def pad_cells_axis(grid, q, axis):
    """Extend a cell array by one ghost layer along an axis, per its bc.

    Periodic wraps; every other tag copies the edge cell (prescribed-state
    ghosts are applied by the callers that need them).
    """
    q = np.asarray(q)
    nd = grid.dim
    if grid.bc.is_periodic(axis):
        lo = q[_slc(nd, axis, slice(-1, None))]
        hi = q[_slc(nd, axis, slice(None, 1))]
    else:
        lo = q[_slc(nd, axis, slice(None, 1))]
        hi = q[_slc(nd, axis, slice(-1, None))]
    return np.concatenate([lo, q, hi], axis=axis)


def interface_density(grid, law, rho):
    """Gamma-mean of the two adjacent cell densities, per face."""
    comps = []
    nd = grid.dim
    for axis in range(nd):
        ext = pad_cells_axis(grid, rho, axis)
        left = ext[_slc(nd, axis, slice(None, -1))]
        right = ext[_slc(nd, axis, slice(1, None))]
        comps.append(gamma_mean(law, left, right))
    return FaceField(comps)


def stabilisation_velocity(grid, law, rho, phi, eta, dt, eps, rho_face=None):
    """delta_u = (eta dt / eps^2) rho_sigma (grad(h'(rho) + phi))_sigma.

    Zero on non-periodic exterior faces (wall and prescribed-state sides have
    no imbalance by construction; transmissive ghosts copy, so the gradient
    vanishes there too).
    """
    if rho_face is None:
        rho_face = interface_density(grid, law, rho)
    G = law.helmholtz_prime(rho) + phi
    nd = grid.dim
    comps = []
    for axis in range(nd):
        ext = pad_cells_axis(grid, G, axis)
        dG = np.diff(ext, axis=axis) / grid.h[axis]
        if not grid.bc.is_periodic(axis):
            dG[_slc(nd, axis, 0)] = 0.0
            dG[_slc(nd, axis, -1)] = 0.0
        comps.append((dt / eps**2) * eta[axis] * rho_face[axis] * dG)
    return FaceField(comps)


def mass_flux(grid, law, rho, u, delta_u, rho_face=None):
    """Primal flux F = |sigma| rho_sigma (u - delta_u), zeroed on wall/steady
    exterior faces; transmissive exterior faces carry rho_edge * u."""
    if rho_face is None:
        rho_face = interface_density(grid, law, rho)
    nd = grid.dim
    comps = []
    for axis in range(nd):
        f = grid.face_area[axis] * rho_face[axis] * (u[axis] - delta_u[axis])
        if not grid.bc.is_periodic(axis):
            for side, slot in ((LO, 0), (HI, -1)):
                if grid.bc.tag(axis, side) in (WALL, STEADY):
                    f[_slc(nd, axis, slot)] = 0.0
        comps.append(f)
    return FaceField(comps)


def upwind_value(flux, here, neighbor):
    """Donor value seen by a dual flux: 'here' when flux >= 0."""
    return np.where(np.asarray(flux) >= 0.0, here, neighbor)


@dataclass
class DualFluxes:
    """Fluxes through the dual-cell faces of each axis family.

    along[i]  : cell-shaped; flux through the +i dual face sitting at each
                cell centre, = mean of the cell's two axis-i primal fluxes.
    cross[i,j]: corner-shaped (faces along i x faces along j); flux through
                the +j dual face of each axis-i dual cell, = mean of the two
                adjacent primal j-fluxes.  Rows for exterior i-faces are only
                meaningful on periodic axes.
    """

    along: tuple
    cross: dict


def dual_fluxes(grid, primal):
    nd = grid.dim
    along = []
    cross = {}
    for i in range(nd):
        fi = primal[i]
        lo = fi[_slc(nd, i, slice(None, -1))]
        hi = fi[_slc(nd, i, slice(1, None))]
        along.append(0.5 * (lo + hi))
        for j in range(nd):
            if j == i:
                continue
            fj = primal[j]  # cells along i, faces along j
            ext = pad_cells_axis(grid, fj, i)
            left = ext[_slc(nd, i, slice(None, -1))]
            right = ext[_slc(nd, i, slice(1, None))]
            cross[(i, j)] = 0.5 * (left + right)
    return DualFluxes(along=tuple(along), cross=cross)


def dual_convection(grid, dual, u=None):
    """Per dual cell: sum of dual fluxes, upwind-weighted by u when given.

    Returns a FaceField (meaningful on interior faces; exterior slots are
    zeroed for non-periodic axes, mirrored for periodic ones).  With u=None
    the plain flux sum is returned, which is the quantity entering the dual
    mass balance.
    """
    nd = grid.dim
    comps = []
    for i in range(nd):
        shape = grid.face_shape(i)
        conv = np.zeros(shape)
        ui = None if u is None else u[i]
        n_i = grid.n[i]

        # same-axis dual faces, one per cell centre
        g = dual.along[i]
        if u is None:
            prod = g
        else:
            here = ui[_slc(nd, i, slice(None, -1))]
            there = ui[_slc(nd, i, slice(1, None))]
            prod = g * upwind_value(g, here, there)
        conv[_slc(nd, i, slice(1, -1))] = np.diff(prod, axis=i)
        if grid.bc.is_periodic(i):
            wrap = prod[_slc(nd, i, 0)] - prod[_slc(nd, i, -1)]
            conv[_slc(nd, i, 0)] = wrap
            conv[_slc(nd, i, -1)] = wrap

        # transverse dual faces (2D)
        for j in range(nd):
            if j == i:
                continue
            C = dual.cross[(i, j)]  # faces along i x faces along j
            if u is None:
                prod = C
            else:
                per_j = grid.bc.is_periodic(j)
                n_j = grid.n[j]
                # donor face below / above each level-t_j dual face
                take_lo = np.arange(n_j + 1) - 1
                take_hi = np.arange(n_j + 1)
                if per_j:
                    take_lo %= n_j
                    take_hi %= n_j
                else:
                    take_lo = np.clip(take_lo, 0, n_j - 1)
                    take_hi = np.clip(take_hi, 0, n_j - 1)
                u_lo = np.take(ui, take_lo, axis=j)
                u_hi = np.take(ui, take_hi, axis=j)
                prod = C * upwind_value(C, u_lo, u_hi)
            conv += np.diff(prod, axis=j)

        if not grid.bc.is_periodic(i):
            conv[_slc(nd, i, 0)] = 0.0
            conv[_slc(nd, i, -1)] = 0.0
        comps.append(conv)
    return FaceField(comps)


def dual_inflow(grid, dual):
    """Total incoming dual flux per dual cell: sum of max(-F_out, 0).

    Same boundary pieces as dual_convection, keeping only the negative
    part of each outward-oriented flux.  This is the quantity limited by
    the time-step hypothesis of the energy inequality: dt * inflow must
    not exceed half the dual-cell mass.
    """
    nd = grid.dim
    comps = []
    for i in range(nd):
        infl = np.zeros(grid.face_shape(i))
        g = dual.along[i]
        pos = np.maximum(g, 0.0)
        neg = np.maximum(-g, 0.0)
        infl[_slc(nd, i, slice(1, -1))] = (
            neg[_slc(nd, i, slice(1, None))] + pos[_slc(nd, i, slice(None, -1))]
        )
        if grid.bc.is_periodic(i):
            wrap = neg[_slc(nd, i, 0)] + pos[_slc(nd, i, -1)]
            infl[_slc(nd, i, 0)] = wrap
            infl[_slc(nd, i, -1)] = wrap
        for j in range(nd):
            if j == i:
                continue
            C = dual.cross[(i, j)]
            infl += np.maximum(-C, 0.0)[_slc(nd, j, slice(1, None))]
            infl += np.maximum(C, 0.0)[_slc(nd, j, slice(None, -1))]
        if not grid.bc.is_periodic(i):
            infl[_slc(nd, i, 0)] = 0.0
            infl[_slc(nd, i, -1)] = 0.0
        comps.append(infl)
    return FaceField(comps)


def dual_mass_residual(grid, rho_old, rho_new, primal, dt):
    """|D_sigma|(rho_D^{n+1} - rho_D^n)/dt + sum_eps F_eps per interior face.

    Zero to round-off whenever rho_new was produced by a conservative
    application of the given primal fluxes.
    """
    from .grid import dual_average

    dual = dual_fluxes(grid, primal)
    flux_sum = dual_convection(grid, dual)
    d_old = dual_average(grid, rho_old)
    d_new = dual_average(grid, rho_new)
    comps = []
    for i in range(grid.dim):
        res = grid.dual_volume(i) * (d_new[i] - d_old[i]) / dt + flux_sum[i]
        res[~grid.interior_mask(i)] = 0.0
        comps.append(res)
    return FaceField(comps)
