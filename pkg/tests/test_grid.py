"""Grid geometry and the discrete div/grad/laplacian calculus."""

import numpy as np
import pytest

from wbeuler.grid import (
    HI,
    LO,
    PERIODIC,
    STEADY,
    TRANSMISSIVE,
    WALL,
    BoundaryCondition,
    FaceField,
    build_grid,
    discrete_divergence,
    discrete_gradient,
    discrete_laplacian,
    dual_average,
)

from _props import (
    duality_gap,
    loop_divergence,
    loop_gradient,
    random_face_field,
    random_face_weight,
    random_grid,
)


def wall_grid_1d(n=4, length=1.0):
    return build_grid([length], [n], BoundaryCondition.uniform(WALL, 1))


def test_geometry_1d_four_cells():
    g = wall_grid_1d(4)
    assert g.cell_volume == 0.25
    assert g.face_area[0] == 1.0
    assert g.total_volume == 1.0
    assert np.allclose(g.cell_centers(0), [0.125, 0.375, 0.625, 0.875])
    assert np.allclose(g.face_coords(0), [0.0, 0.25, 0.5, 0.75, 1.0])
    inter = g.interior_mask(0)
    assert inter.sum() == 3 and not inter[0] and not inter[-1]
    # exterior dual cells keep only the adjacent half cell
    assert np.allclose(g.dual_volume(0), [0.125, 0.25, 0.25, 0.25, 0.125])


def test_geometry_2d_periodic_all_faces_interior():
    g = build_grid([1.0, 1.0], [2, 2], BoundaryCondition.uniform(PERIODIC, 2))
    for axis in range(2):
        owned = g.owned_mask(axis) & g.interior_mask(axis)
        assert owned.sum() == 4


def test_cell_tiling_machine_precision():
    g = wall_grid_1d(100)
    assert abs(g.integrate_cells(np.ones(100)) - 1.0) <= 1e-15


def test_dual_cells_tile_domain_per_axis():
    rng = np.random.default_rng(7)
    for _ in range(25):
        g = random_grid(rng, tags=(WALL, TRANSMISSIVE, STEADY))
        for axis in range(g.dim):
            vols = g.dual_volume(axis)[g.owned_mask(axis)]
            assert abs(vols.sum() - g.total_volume) <= 1e-13 * g.total_volume


def test_face_adjacency_counts():
    rng = np.random.default_rng(8)
    for _ in range(25):
        g = random_grid(rng, tags=(WALL, TRANSMISSIVE))
        for axis in range(g.dim):
            L, R = g.face_cells(axis)
            inter = g.interior_mask(axis)
            both = (L >= 0) & (R >= 0)
            assert np.array_equal(both, inter)
            # exterior faces keep exactly the one adjacent cell
            assert np.all((L >= 0) | (R >= 0))


def test_construction_errors():
    bc1 = BoundaryCondition.uniform(WALL, 1)
    with pytest.raises(ValueError):
        build_grid([1.0], [1], bc1)
    with pytest.raises(ValueError):
        build_grid([-1.0], [4], bc1)
    with pytest.raises(ValueError):
        build_grid([1.0, 1.0], [4, 4], bc1)
    with pytest.raises(ValueError):
        BoundaryCondition((("wall", "nonsense"),))
    with pytest.raises(ValueError):
        BoundaryCondition(((PERIODIC, WALL),))


def test_gradient_constant_is_zero():
    g = wall_grid_1d(5)
    grad = discrete_gradient(g, np.full(5, 3.7))
    assert np.all(grad[0] == 0.0)


def test_gradient_of_cell_centers_is_one():
    g = wall_grid_1d(4)
    grad = discrete_gradient(g, g.cell_centers(0))
    assert np.allclose(grad[0][1:-1], 1.0)
    assert grad[0][0] == 0.0 and grad[0][-1] == 0.0


def test_gradient_single_spike_hand_values():
    # unit value in cell 1, h=0.25: +4 entering the cell, -4 leaving it
    g = wall_grid_1d(4)
    q = np.array([0.0, 1.0, 0.0, 0.0])
    grad = discrete_gradient(g, q)
    assert np.allclose(grad[0], [0.0, 4.0, -4.0, 0.0, 0.0])


def test_gradient_matches_loop_oracle():
    rng = np.random.default_rng(21)
    for _ in range(30):
        g = random_grid(rng, tags=(WALL, TRANSMISSIVE, STEADY))
        q = rng.normal(size=g.n)
        got = discrete_gradient(g, q)
        want = loop_gradient(g, q)
        for axis in range(g.dim):
            assert np.allclose(got[axis], want[axis], rtol=0.0, atol=1e-14)


def test_gradient_ghost_values_one_sided():
    g = wall_grid_1d(3)
    q = np.array([2.0, 5.0, 3.0])
    ghosts = {(0, LO): 1.0, (0, HI): 6.0}
    grad = discrete_gradient(g, q, exterior_values=ghosts)
    want = loop_gradient(g, q, exterior_values=ghosts)
    assert np.allclose(grad[0], want[0], rtol=0.0, atol=1e-14)
    assert grad[0][0] == (2.0 - 1.0) / g.h[0]
    assert grad[0][-1] == (6.0 - 3.0) / g.h[0]


def test_divergence_constant_periodic_is_zero():
    g = build_grid([1.0], [6], BoundaryCondition.uniform(PERIODIC, 1))
    v = FaceField([np.full(7, 0.3)])
    assert np.allclose(discrete_divergence(g, v), 0.0, atol=1e-15)


def test_divergence_two_cell_hand_values():
    # interior face flux 1 with h=1/2: (1/|K|)|sigma| v = (+2, -2)
    g = wall_grid_1d(2)
    v = FaceField([np.array([0.0, 1.0, 0.0])])
    assert np.allclose(discrete_divergence(g, v), [2.0, -2.0])


def test_divergence_matches_loop_oracle():
    rng = np.random.default_rng(22)
    for _ in range(30):
        g = random_grid(rng, tags=(WALL, TRANSMISSIVE, STEADY))
        v = random_face_field(rng, g)
        w = FaceField(tuple(rng.uniform(0.5, 2.0, g.face_shape(a)) for a in range(g.dim)))
        assert np.allclose(discrete_divergence(g, v), loop_divergence(g, v), atol=1e-13)
        assert np.allclose(
            discrete_divergence(g, v, face_weight=w),
            loop_divergence(g, v, weight=w),
            atol=1e-13,
        )


def test_weighted_divergence_unit_weight_reduces():
    rng = np.random.default_rng(23)
    g = random_grid(rng)
    v = random_face_field(rng, g)
    ones = FaceField(tuple(np.ones(g.face_shape(a)) for a in range(g.dim)))
    a = discrete_divergence(g, v, face_weight=ones)
    b = discrete_divergence(g, v)
    assert np.array_equal(a, b)


def test_laplacian_hand_stencil():
    g = build_grid([1.0], [3], BoundaryCondition.uniform(WALL, 1))
    lap = discrete_laplacian(g, np.array([0.0, 1.0, 0.0]))
    assert np.allclose(lap, [9.0, -18.0, 9.0])


def test_laplacian_constant_zero():
    g = wall_grid_1d(6)
    assert np.allclose(discrete_laplacian(g, np.full(6, 2.2)), 0.0, atol=1e-14)


def test_laplacian_quadratic_interior():
    g = wall_grid_1d(64)
    x = g.cell_centers(0)
    lap = discrete_laplacian(g, x**2)
    assert np.allclose(lap[1:-1], 2.0, atol=1e-9)


def test_laplacian_is_div_of_grad():
    rng = np.random.default_rng(24)
    for _ in range(10):
        g = random_grid(rng)
        q = rng.normal(size=g.n)
        assert np.allclose(
            discrete_laplacian(g, q),
            discrete_divergence(g, discrete_gradient(g, q)),
            atol=1e-13,
        )


def test_laplacian_gauss_sum_zero():
    """Neumann exterior faces make the integrated laplacian vanish."""
    rng = np.random.default_rng(25)
    for _ in range(20):
        g = random_grid(rng, tags=(WALL, TRANSMISSIVE, STEADY))
        q = rng.normal(size=g.n)
        total = g.integrate_cells(discrete_laplacian(g, q))
        scale = max(1.0, float(np.max(np.abs(q))) / min(g.h) ** 2)
        assert abs(total) <= 1e-12 * scale


def test_operator_linearity():
    rng = np.random.default_rng(26)
    g = random_grid(rng)
    a = rng.normal(size=g.n)
    b = rng.normal(size=g.n)
    al, be = 1.75, -0.3125  # dyadic factors keep scaling exact
    ga = discrete_gradient(g, a)
    gb = discrete_gradient(g, b)
    gc = discrete_gradient(g, al * a + be * b)
    for axis in range(g.dim):
        assert np.allclose(gc[axis], al * ga[axis] + be * gb[axis], atol=1e-13)


def test_duality_random_fields():
    """Sums by parts: cell sum of p*div(v) cancels the dual-face sum."""
    rng = np.random.default_rng(27)
    for _ in range(60):
        g = random_grid(rng)
        p = rng.normal(size=g.n)
        v = random_face_field(rng, g)
        assert duality_gap(g, p, v) <= 1e-13


def test_weighted_duality_random_fields():
    rng = np.random.default_rng(28)
    for _ in range(60):
        g = random_grid(rng)
        p = rng.normal(size=g.n)
        v = random_face_field(rng, g)
        q = random_face_weight(rng, g)
        assert duality_gap(g, p, v, q_face=q) <= 1e-13


def test_dual_average_examples():
    g = wall_grid_1d(2)
    assert np.allclose(dual_average(g, np.array([3.0, 3.0]))[0], 3.0)
    av = dual_average(g, np.array([1.0, 3.0]))[0]
    assert av[1] == 2.0
    assert av[0] == 1.0 and av[2] == 3.0  # exterior takes the edge cell


def test_dual_average_bounds_and_positivity():
    rng = np.random.default_rng(29)
    for _ in range(20):
        g = random_grid(rng, tags=(WALL, TRANSMISSIVE, STEADY))
        q = rng.uniform(0.1, 5.0, size=g.n)
        av = dual_average(g, q)
        for axis in range(g.dim):
            assert np.all(av[axis] > 0.0)
            assert np.all(av[axis] <= np.max(q) + 1e-15)
            assert np.all(av[axis] >= np.min(q) - 1e-15)


def test_sync_face_per_tag():
    bc = BoundaryCondition(((WALL, TRANSMISSIVE),))
    g = build_grid([1.0], [4], bc)
    v = FaceField([np.arange(5.0) + 1.0])
    g.sync_face(v)
    assert v[0][0] == 0.0
    assert v[0][-1] == v[0][-2]

    g2 = build_grid([1.0], [4], BoundaryCondition.uniform(PERIODIC, 1))
    v2 = FaceField([np.arange(5.0)])
    g2.sync_face(v2)
    assert v2[0][-1] == v2[0][0]

    g3 = build_grid([1.0], [4], BoundaryCondition.uniform(STEADY, 1))
    v3 = FaceField([np.full(5, 2.0)])
    g3.sync_face(v3)
    assert v3[0][0] == 0.0 and v3[0][-1] == 0.0
