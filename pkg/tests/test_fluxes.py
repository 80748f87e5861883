"""Stabilised mass fluxes, dual-cell fluxes, and the dual mass balance."""

import numpy as np

from wbeuler.fluxes import (
    dual_convection,
    dual_fluxes,
    dual_inflow,
    dual_mass_residual,
    interface_density,
    mass_flux,
    stabilisation_velocity,
    upwind_value,
)
from wbeuler.grid import (
    PERIODIC,
    STEADY,
    WALL,
    BoundaryCondition,
    FaceField,
    build_grid,
)
from wbeuler.thermo import GasLaw, gamma_mean, hydrostatic_from_potential

from _props import random_face_field, random_grid


def test_interface_density_matches_pairwise_gamma_mean():
    law = GasLaw(1.4)
    g = build_grid([1.0], [4], BoundaryCondition.uniform(WALL, 1))
    rho = np.array([1.0, 2.0, 0.5, 0.8])
    rf = interface_density(g, law, rho)[0]
    assert np.array_equal(rf[1:-1], gamma_mean(law, rho[:-1], rho[1:]))
    # edge copies pair the edge cell with itself: exactly the edge value
    assert rf[0] == 1.0 and rf[-1] == 0.8


def test_interface_density_periodic_wrap():
    law = GasLaw(1.4)
    g = build_grid([1.0], [4], BoundaryCondition.uniform(PERIODIC, 1))
    rho = np.array([1.0, 2.0, 0.5, 0.8])
    rf = interface_density(g, law, rho)[0]
    wrap = gamma_mean(law, np.array(0.8), np.array(1.0))
    assert rf[0] == wrap and rf[-1] == wrap


def test_stabilisation_velocity_hand_value():
    # phi = 0, rho = (1, 2), gamma = 2, h = 1/2, eta = 1, dt = 0.1, eps = 1:
    # the pressure gradient is 6, so delta_u = 0.1 * 6 = 0.6
    g = build_grid([1.0], [2], BoundaryCondition.uniform(WALL, 1))
    law = GasLaw(2.0)
    rho = np.array([1.0, 2.0])
    du = stabilisation_velocity(g, law, rho, np.zeros(2), [1.0], 0.1, 1.0)[0]
    assert abs(du[1] - 0.6) <= 1e-14
    assert du[0] == 0.0 and du[-1] == 0.0


def test_stabilisation_velocity_linear_in_eta_and_dt():
    g = build_grid([1.0], [6], BoundaryCondition.uniform(WALL, 1))
    law = GasLaw(1.4)
    rng = np.random.default_rng(41)
    rho = rng.uniform(0.5, 2.0, 6)
    base = stabilisation_velocity(g, law, rho, np.zeros(6), [1.0], 0.1, 1.0)[0]
    double = stabilisation_velocity(g, law, rho, np.zeros(6), [2.0], 0.1, 1.0)[0]
    assert np.allclose(double, 2.0 * base, rtol=1e-15, atol=0.0)
    halfdt = stabilisation_velocity(g, law, rho, np.zeros(6), [1.0], 0.05, 1.0)[0]
    assert np.allclose(halfdt, 0.5 * base, rtol=1e-15, atol=0.0)


def test_stabilisation_velocity_vanishes_on_hydrostatic_state():
    g = build_grid([1.0], [40], BoundaryCondition.uniform(WALL, 1))
    law = GasLaw(1.4)
    h = hydrostatic_from_potential(g, law, lambda x: np.sin(2 * np.pi * x))
    du = stabilisation_velocity(g, law, h.rho, h.phi, [2.0], 0.3, 1e-3)
    assert np.all(du[0] == 0.0)


def test_mass_flux_hand_value_and_wall_zeroing():
    g = build_grid([1.0], [2], BoundaryCondition.uniform(WALL, 1))
    law = GasLaw(1.4)
    rho = np.array([2.0, 2.0])  # equal pair: interface density exactly 2
    u = FaceField([np.array([0.3, 0.3, 0.3])])
    du = FaceField([np.array([0.1, 0.1, 0.1])])
    F = mass_flux(g, law, rho, u, du)[0]
    assert abs(F[1] - 0.4) <= 1e-15
    assert F[0] == 0.0 and F[-1] == 0.0


def test_mass_flux_zero_when_velocity_matches_stabilisation():
    rng = np.random.default_rng(42)
    g = random_grid(rng)
    law = GasLaw(1.4)
    rho = rng.uniform(0.5, 2.0, g.n)
    du = random_face_field(rng, g)
    F = mass_flux(g, law, rho, du, du)
    for axis in range(g.dim):
        assert np.all(F[axis] == 0.0)


def test_upwind_value_triples():
    assert upwind_value(1.0, 2.0, 5.0) == 2.0
    assert upwind_value(-1.0, 2.0, 5.0) == 5.0
    assert upwind_value(0.0, 2.0, 5.0) == 2.0


def test_dual_fluxes_zero_in_zero_out():
    rng = np.random.default_rng(43)
    g = random_grid(rng)
    d = dual_fluxes(g, FaceField.zeros(g))
    for axis in range(g.dim):
        assert np.all(d.along[axis] == 0.0)
    for v in d.cross.values():
        assert np.all(v == 0.0)


def test_dual_fluxes_along_axis_average():
    g = build_grid([1.0], [4], BoundaryCondition.uniform(WALL, 1))
    F = FaceField([np.array([0.0, 1.0, 3.0, -2.0, 0.0])])
    d = dual_fluxes(g, F)
    assert np.allclose(d.along[0], [0.5, 2.0, 0.5, -1.0])


def test_dual_fluxes_transverse_average_2d():
    rng = np.random.default_rng(44)
    g = build_grid([1.0, 1.0], [3, 4], BoundaryCondition.uniform(WALL, 2))
    F = random_face_field(rng, g)
    d = dual_fluxes(g, F)
    C = d.cross[(0, 1)]  # x-dual cells, y-directed dual faces
    fy = F[1]
    # interior x-face s averages the y-fluxes of cells s-1 and s
    for s in range(1, 3):
        assert np.allclose(C[s], 0.5 * (fy[s - 1] + fy[s]))
    # boundary pads copy the edge cell
    assert np.allclose(C[0], fy[0])
    assert np.allclose(C[3], fy[2])


def test_dual_convection_plain_sum_telescopes_1d():
    g = build_grid([1.0], [4], BoundaryCondition.uniform(WALL, 1))
    F = FaceField([np.array([0.0, 1.0, 3.0, -2.0, 0.0])])
    conv = dual_convection(g, dual_fluxes(g, F))[0]
    # interior dual cell around face s: along[s] - along[s-1]
    assert np.allclose(conv[1:-1], [1.5, -1.5, -1.5])
    assert conv[0] == 0.0 and conv[-1] == 0.0


def test_dual_inflow_uniform_positive_flux():
    g = build_grid([1.0], [5], BoundaryCondition.uniform(WALL, 1))
    F = FaceField([np.full(6, 2.0)])
    infl = dual_inflow(g, dual_fluxes(g, F))[0]
    # only the upstream dual face feeds each interior dual cell
    assert np.allclose(infl[1:-1], 2.0)
    assert infl[0] == 0.0 and infl[-1] == 0.0
    assert np.all(dual_inflow(g, dual_fluxes(g, FaceField([np.full(6, -2.0)])))[0][1:-1] == 2.0)


def test_conservativity_wall_and_periodic():
    """Total mass change from the primal fluxes telescopes to zero."""
    rng = np.random.default_rng(45)
    law = GasLaw(1.4)
    for _ in range(20):
        g = random_grid(rng)  # wall/steady/periodic tags only
        rho = rng.uniform(0.5, 2.0, g.n)
        u = random_face_field(rng, g)
        du = stabilisation_velocity(g, law, rho, rng.normal(size=g.n), [1.0] * g.dim, 0.05, 1.0)
        F = mass_flux(g, law, rho, u, du)
        total = 0.0
        for idx in np.ndindex(*g.n):
            for axis in range(g.dim):
                hi = list(idx)
                hi[axis] += 1
                total += F[axis][tuple(hi)] - F[axis][idx]
        assert abs(total) <= 1e-12 * max(1.0, np.max(np.abs(F[0])))


def test_dual_mass_balance_random_states():
    """Applying the primal fluxes conservatively must satisfy the dual-cell
    balance to round-off; that is the defining property of the dual fluxes."""
    rng = np.random.default_rng(46)
    for _ in range(40):
        g = random_grid(rng)
        rho_old = rng.uniform(0.5, 2.0, g.n)
        F = random_face_field(rng, g)
        dt = 0.01
        rho_new = rho_old.copy()
        for idx in np.ndindex(*g.n):
            acc = 0.0
            for axis in range(g.dim):
                hi = list(idx)
                hi[axis] += 1
                acc += F[axis][tuple(hi)] - F[axis][idx]
            rho_new[idx] -= dt * acc / g.cell_volume
        res = dual_mass_residual(g, rho_old, rho_new, F, dt)
        for axis in range(g.dim):
            scale = np.max(g.dual_volume(axis)) * np.max(np.abs(rho_new)) / dt
            assert np.max(np.abs(res[axis])) <= 1e-13 * scale
