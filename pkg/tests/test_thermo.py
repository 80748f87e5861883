"""Equation of state, gamma-mean interface density, hydrostatic profiles."""

import numpy as np
import pytest

from wbeuler.grid import WALL, BoundaryCondition, build_grid, discrete_gradient
from wbeuler.thermo import (
    GasLaw,
    calibrate_constant,
    gamma_mean,
    gamma_mean_derivatives,
    helmholtz_prime_difference,
    helmholtz_prime_increment,
    hydrostatic_from_potential,
    relative_internal_energy,
)

from _props import gamma_mean_bisection

GAMMAS = (1.1, 1.4, 2.0, 3.0)


def test_pressure_examples():
    assert GasLaw(2.0).pressure(np.array(3.0)) == 9.0
    assert GasLaw(1.4).pressure(np.array(1.0)) == 1.0
    assert GasLaw(1.4).pressure(np.array(0.0)) == 0.0
    with pytest.raises(ValueError):
        GasLaw(1.4).pressure(np.array(-1.0))


def test_gas_law_needs_gamma_above_one():
    with pytest.raises(ValueError):
        GasLaw(1.0)


def test_helmholtz_examples():
    law = GasLaw(2.0)
    assert law.helmholtz(np.array(2.0)) == 4.0
    assert law.helmholtz_prime(np.array(1.0)) == 2.0
    with pytest.raises(ValueError):
        law.helmholtz_prime(np.array(0.0))


def test_helmholtz_legendre_identity():
    # rho h'(rho) - h(rho) = rho^gamma
    law = GasLaw(1.4)
    rho = np.array(0.7)
    lhs = rho * law.helmholtz_prime(rho) - law.helmholtz(rho)
    assert abs(lhs - law.pressure(rho)) <= 1e-15


def test_relative_energy_examples():
    law = GasLaw(2.0)
    assert relative_internal_energy(law, np.array([2.0]), np.array([1.0]))[0] == 1.0
    assert relative_internal_energy(law, np.array([1.0]), np.array([1.0]))[0] == 0.0
    law14 = GasLaw(1.4)
    assert relative_internal_energy(law14, np.array([0.5]), np.array([1.0]))[0] > 0.0
    with pytest.raises(ValueError):
        relative_internal_energy(law14, np.array([1.0]), np.array([0.0]))


def test_relative_energy_nonnegative_zero_on_diagonal():
    rng = np.random.default_rng(31)
    for gamma in GAMMAS:
        law = GasLaw(gamma)
        rho = rng.uniform(1e-3, 10.0, 200)
        ref = rng.uniform(1e-3, 10.0, 200)
        pi = relative_internal_energy(law, rho, ref)
        assert np.all(pi >= 0.0)
        assert np.all(pi[np.abs(rho - ref) > 1e-3] > 0.0)
        assert np.all(relative_internal_energy(law, ref, ref) == 0.0)


def test_relative_energy_convex_in_first_argument():
    rng = np.random.default_rng(32)
    law = GasLaw(1.4)
    a = rng.uniform(0.1, 5.0, 100)
    b = rng.uniform(0.1, 5.0, 100)
    ref = rng.uniform(0.5, 2.0, 100)
    mid = relative_internal_energy(law, 0.5 * (a + b), ref)
    avg = 0.5 * (relative_internal_energy(law, a, ref) + relative_internal_energy(law, b, ref))
    assert np.all(mid <= avg + 1e-14)


def test_relative_energy_branches_match_longdouble():
    """The series branch and the direct branch agree with a long-double
    evaluation of h(rho) - h(ref) - h'(ref)(rho - ref) on both sides of
    the branch cut."""
    law = GasLaw(1.4)
    ref = np.array(0.9)
    g = np.longdouble(1.4)
    for w in (0.18, 0.249, 0.251, 0.35, -0.18, -0.251):
        rho = ref * (1.0 + w)
        got = float(relative_internal_energy(law, rho, ref))
        rl, fl = np.longdouble(rho), np.longdouble(ref)
        want = (rl**g - fl**g - g * fl ** (g - 1) * (rl - fl)) / (g - 1)
        assert abs(got - float(want)) <= 1e-13 * float(want)


def test_relative_energy_tiny_perturbation_scale():
    # Pi ~ h''(ref) drho^2 / 2 keeps full precision through the drho form
    law = GasLaw(1.4)
    ref = np.array([1.25])
    drho = np.array([1e-8])
    got = relative_internal_energy(law, ref + drho, ref, drho=drho)[0]
    want = 0.5 * float(law.helmholtz_second(ref)[0]) * 1e-16
    assert got > 0.0
    assert abs(got - want) <= 1e-4 * want


def test_helmholtz_prime_increment_consistency():
    rng = np.random.default_rng(33)
    law = GasLaw(1.4)
    ref = rng.uniform(0.5, 2.0, 50)
    drho = rng.uniform(-0.3, 0.6, 50) * ref
    got = helmholtz_prime_increment(law, drho, ref)
    want = law.helmholtz_prime(ref + drho) - law.helmholtz_prime(ref)
    assert np.allclose(got, want, rtol=1e-12, atol=1e-14)
    alias = helmholtz_prime_difference(law, ref + drho, ref)
    assert np.allclose(got, alias, rtol=1e-12, atol=1e-14)


def test_helmholtz_prime_increment_tiny_perturbation():
    law = GasLaw(1.4)
    ref = np.array([1.0])
    s = np.array([1e-13])
    got = helmholtz_prime_increment(law, s, ref)[0]
    # long-double direct difference is the (cancellation-limited) oracle
    g = np.longdouble(1.4)
    want = float(g / (g - 1) * ((1 + np.longdouble(1e-13)) ** (g - 1) - 1))
    assert abs(got - want) <= 1e-5 * abs(want)
    with pytest.raises(ValueError):
        helmholtz_prime_increment(law, np.array([-2.0]), ref)


def test_gamma_mean_examples():
    # gamma = 2 collapses to the arithmetic mean (up to the exp/log round trip)
    assert abs(gamma_mean(GasLaw(2.0), np.array(1.0), np.array(3.0)) - 2.0) <= 1e-15
    assert gamma_mean(GasLaw(1.4), np.array(0.8), np.array(0.8)) == 0.8
    with pytest.raises(ValueError):
        gamma_mean(GasLaw(1.4), np.array(1.0), np.array(0.0))


def test_gamma_mean_sod_pair_vs_bisection():
    got = float(gamma_mean(GasLaw(1.4), np.array(1.0), np.array(0.125)))
    want = gamma_mean_bisection(1.4, 1.0, 0.125)
    assert 0.125 <= got <= 1.0
    assert abs(got - want) <= 1e-12 * want


def test_gamma_mean_random_pairs_vs_bisection():
    """Unit-scale slice of the acceptance battery (criterion 7 runs 1000)."""
    rng = np.random.default_rng(34)
    for gamma in GAMMAS:
        law = GasLaw(gamma)
        for _ in range(50):
            a = float(np.exp(rng.uniform(np.log(1e-3), np.log(1e3))))
            b = float(np.exp(rng.uniform(np.log(1e-3), np.log(1e3))))
            got = float(gamma_mean(law, np.array(a), np.array(b)))
            want = gamma_mean_bisection(gamma, a, b)
            assert min(a, b) <= got <= max(a, b)
            assert abs(got - want) <= 1e-12 * want


def test_gamma_mean_near_equal_pairs():
    # cancellation regime: the closed form is useless here, the mean is not
    law = GasLaw(1.4)
    for s in (1e-6, 1e-9, 1e-12, 1e-14):
        a, b = 1.0, 1.0 + s
        got = float(gamma_mean(law, np.array(a), np.array(b)))
        want = gamma_mean_bisection(1.4, a, b)
        assert a <= got <= b
        assert abs(got - want) <= 1e-12 * want


def test_gamma_mean_symmetry():
    rng = np.random.default_rng(35)
    law = GasLaw(1.4)
    a = rng.uniform(0.1, 5.0, 100)
    b = rng.uniform(0.1, 5.0, 100)
    assert np.array_equal(gamma_mean(law, a, b), gamma_mean(law, b, a))


def test_gamma_mean_derivatives_examples():
    law2 = GasLaw(2.0)
    da, db = gamma_mean_derivatives(law2, np.array(1.3), np.array(0.4))
    assert abs(da - 0.5) <= 1e-14 and abs(db - 0.5) <= 1e-14
    law = GasLaw(1.4)
    da, db = gamma_mean_derivatives(law, np.array(0.8), np.array(0.8))
    assert da == 0.5 and db == 0.5  # bit-equal arguments hit the exact branch


def test_gamma_mean_derivatives_swap_symmetry():
    rng = np.random.default_rng(36)
    law = GasLaw(1.4)
    for _ in range(50):
        a, b = rng.uniform(0.1, 5.0, 2)
        da, db = gamma_mean_derivatives(law, np.array(a), np.array(b))
        db2, da2 = gamma_mean_derivatives(law, np.array(b), np.array(a))
        assert abs(da - da2) <= 1e-14 and abs(db - db2) <= 1e-14


def test_gamma_mean_derivatives_match_finite_differences():
    law = GasLaw(1.4)
    pairs = [(1.0, 0.5)]
    rng = np.random.default_rng(37)
    pairs += [tuple(rng.uniform(0.2, 4.0, 2)) for _ in range(20)]
    for a, b in pairs:
        da, db = gamma_mean_derivatives(law, np.array(a), np.array(b))
        h = 1e-6
        fa = (gamma_mean(law, np.array(a + h), np.array(b))
              - gamma_mean(law, np.array(a - h), np.array(b))) / (2 * h)
        fb = (gamma_mean(law, np.array(a), np.array(b + h))
              - gamma_mean(law, np.array(a), np.array(b - h))) / (2 * h)
        assert abs(da - fa) <= 1e-6 * max(1.0, abs(fa))
        assert abs(db - fb) <= 1e-6 * max(1.0, abs(fb))


def test_gamma_mean_derivative_branches_consistent():
    # Taylor branch (tiny separation) against the direct branch nearby
    law = GasLaw(1.4)
    vals = []
    for s in (0.049, 0.051):
        a, b = 1.0, float(np.exp(s))
        vals.append(gamma_mean_derivatives(law, np.array(a), np.array(b)))
    (da1, db1), (da2, db2) = vals
    assert abs(da1 - da2) <= 2e-3 and abs(db1 - db2) <= 2e-3


def test_product_identity_gradient_pressure():
    """(grad rho^gamma) = gamma_mean * (grad h'(rho)) face-wise, the identity
    the hydrostatic construction leans on."""
    rng = np.random.default_rng(38)
    for gamma in GAMMAS:
        law = GasLaw(gamma)
        g = build_grid([1.0], [20], BoundaryCondition.uniform(WALL, 1))
        q = rng.uniform(0.3, 3.0, 20)
        gp = discrete_gradient(g, law.pressure(q))[0]
        gh = discrete_gradient(g, law.helmholtz_prime(q))[0]
        L, R = q[:-1], q[1:]
        m = gamma_mean(law, L, R)
        resid = gp[1:-1] - m * gh[1:-1]
        assert np.max(np.abs(resid)) <= 1e-12 * max(1.0, np.max(np.abs(gp)))


def test_hydrostatic_flat_potential_is_unit_density():
    g = build_grid([1.0], [8], BoundaryCondition.uniform(WALL, 1))
    law = GasLaw(1.4)
    h = hydrostatic_from_potential(g, law, lambda x: np.zeros_like(x))
    # the default C = gamma/(gamma-1) carries ~2 ulp of rounding, so the
    # collapsed profile is 1 only to that accuracy
    assert np.max(np.abs(h.rho - 1.0)) <= 1e-15
    assert np.max(np.abs(h.p - 1.0)) <= 2e-15


def test_hydrostatic_linear_potential_profile_value():
    g = build_grid([1.0], [5], BoundaryCondition.uniform(WALL, 1))
    law = GasLaw(1.4)
    h = hydrostatic_from_potential(g, law, lambda x: x, C=3.5)
    want = (1.0 - (0.4 / 1.4) * 0.5) ** 2.5  # profile at the x=0.5 cell center
    assert abs(h.rho[2] - want) <= 1e-14 * want


def test_hydrostatic_balance_residual_sine():
    g = build_grid([1.0], [100], BoundaryCondition.uniform(WALL, 1))
    law = GasLaw(1.4)
    h = hydrostatic_from_potential(g, law, lambda x: np.sin(2 * np.pi * x))
    gp = discrete_gradient(g, h.p)[0]
    gphi = discrete_gradient(g, h.phi)[0]
    resid = gp + h.rho_face[0] * gphi
    inter = g.interior_mask(0)
    assert np.max(np.abs(resid[inter])) <= 1e-12 * np.max(np.abs(gp))
    # stored potential makes h'(rho~) + phi literally constant
    assert np.all(h.balance == h.C)


def test_hydrostatic_rejects_vacuum_profile():
    g = build_grid([1.0], [8], BoundaryCondition.uniform(WALL, 1))
    law = GasLaw(1.4)
    with pytest.raises(ValueError):
        hydrostatic_from_potential(g, law, lambda x: 10.0 * x)


def test_calibrate_constant_matches_target_mass():
    g = build_grid([1.0], [50], BoundaryCondition.uniform(WALL, 1))
    law = GasLaw(1.4)
    target = 0.75
    C = calibrate_constant(g, law, lambda x: x, target)
    h = hydrostatic_from_potential(g, law, lambda x: x, C=C)
    assert abs(g.integrate_cells(h.rho) - target) <= 1e-10 * target
