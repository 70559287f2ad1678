from __future__ import annotations

import math

import numpy as np
import pytest

from bimetric import catalog
from bimetric.connection import (
    IllConditionedMetricWarning,
    MetricField,
    christoffel_classic,
    christoffel_relative,
    cocycle_gamma,
    compatibility_residual,
    covariant_derivative,
    inverse_metric,
    theorem1_residual,
)
from bimetric.diff import DiffMode, ExprField, jet
from bimetric.errors import NotPositiveDefiniteError, ShapeError
from bimetric.rng import XorShift64Star
from bimetric.tensor import ChartSpec

from conftest import box_points

XY = ChartSpec(("x", "y"))
BOX3 = [(-1.0, 1.0)] * 3


def gauss_jordan_inverse(a):
    """Plain Gauss-Jordan elimination with partial pivoting (test oracle)."""
    n = len(a)
    aug = [list(map(float, row)) + [1.0 if i == j else 0.0 for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(aug[r][col]))
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [v / p for v in aug[col]]
        for r in range(n):
            if r != col:
                f = aug[r][col]
                aug[r] = [v - f * w for v, w in zip(aug[r], aug[col])]
    return np.array([row[n:] for row in aug])


def random_pair(seed, dim):
    return (catalog.random_metric(dim, seed).to_metric(), catalog.random_metric(dim, seed + 1000).to_metric())


# --- inverse -----------------------------------------------------------------


def test_inverse_examples(polar):
    e = catalog.builtin("euclidean3").to_metric()
    np.testing.assert_array_equal(inverse_metric(e, [0.1, 0.2, 0.3]).data, np.eye(3))
    inv = inverse_metric(polar, [2.0, 0.3])
    assert (inv.contravariant, inv.covariant) == (2, 0)
    np.testing.assert_allclose(inv.data, np.diag([1.0, 0.25]), rtol=0, atol=1e-15)


def test_inverse_against_gauss_jordan():
    rng = XorShift64Star(3)
    for seed in range(1, 11):
        for dim in (2, 3):
            m = catalog.random_metric(dim, seed).to_metric()
            x = box_points(rng, [(-1, 1)] * dim, 1)[0]
            vals = m.values(x)
            inv = inverse_metric(m, x).data
            np.testing.assert_allclose(inv, gauss_jordan_inverse(vals), rtol=1e-10, atol=1e-12)
            np.testing.assert_allclose(inv @ vals, np.eye(dim), atol=1e-12)


def test_not_positive_definite():
    m = MetricField(XY, [["1", "2"], ["2", "1"]], name="indefinite")
    with pytest.raises(NotPositiveDefiniteError):
        inverse_metric(m, [0.0, 0.0])
    with pytest.raises(NotPositiveDefiniteError):
        christoffel_classic(m, [0.0, 0.0])


def test_ill_conditioned_warns():
    m = MetricField(XY, [["1", "0"], ["0", "1e-10"]], name="thin")
    with pytest.warns(IllConditionedMetricWarning):
        inverse_metric(m, [0.0, 0.0])


def test_asymmetric_metric_rejected():
    with pytest.raises(ShapeError):
        MetricField(XY, [["1", "x"], ["y", "1"]])


# --- Christoffel symbols -------------------------------------------------------


def test_relative_self_is_zero(sphere):
    assert not christoffel_relative(sphere, sphere, [1.0, 0.5]).data.any()


def test_polar_relative_example(polar):
    gamma = christoffel_relative(polar.delta(), polar, [2.0, 0.7]).data
    expected = np.zeros((2, 2, 2))
    expected[0, 1, 1] = -2.0
    expected[1, 0, 1] = expected[1, 1, 0] = 0.5
    np.testing.assert_allclose(gamma, expected, atol=1e-14)


def test_classic_examples(polar, sphere):
    e = catalog.builtin("euclidean2").to_metric()
    assert not christoffel_classic(e, [0.3, -0.2]).data.any()
    gp = christoffel_classic(polar, [2.0, 0.1])
    assert gp[0, 1, 1] == pytest.approx(-2.0, abs=1e-14)
    assert gp[1, 0, 1] == pytest.approx(0.5, abs=1e-14)
    gs = christoffel_classic(sphere, [math.pi / 4, 1.0])
    assert gs[0, 1, 1] == pytest.approx(-0.5, abs=1e-14)
    assert gs[1, 0, 1] == pytest.approx(1.0, abs=1e-14)
    assert gs[1, 1, 0] == pytest.approx(1.0, abs=1e-14)


def test_classic_two_paths_agree():
    rng = XorShift64Star(17)
    metrics = [catalog.builtin(n) for n in catalog.builtin_names()]
    metrics += [catalog.random_metric(d, s) for d in (2, 3) for s in range(1, 6)]
    for man in metrics:
        m = man.to_metric()
        pts = box_points(rng, man.sample_region, 20)
        direct = christoffel_classic(m, pts).data
        via_delta = christoffel_classic(m, pts, method="relative").data
        assert np.max(np.abs(direct - via_delta)) <= 1e-12, man.name


def test_lower_index_symmetry_and_antisymmetry():
    rng = XorShift64Star(2)
    for seed in range(1, 6):
        for dim in (2, 3):
            g, m = random_pair(seed, dim)
            pts = box_points(rng, BOX3[:dim], 20)
            gm = christoffel_relative(g, m, pts).data
            mg = christoffel_relative(m, g, pts).data
            np.testing.assert_array_equal(gm, np.swapaxes(gm, -1, -2))
            assert np.max(np.abs(gm + mg)) <= 1e-10


@pytest.mark.parametrize("c", [0.5, 2.0, 10.0])
def test_rescaling_invariance(c):
    rng = XorShift64Star(4)
    for seed in (1, 2, 3):
        for dim in (2, 3):
            g, m = random_pair(seed, dim)
            pts = box_points(rng, BOX3[:dim], 10)
            base = christoffel_relative(g, m, pts).data
            assert np.max(np.abs(christoffel_relative(g.scaled(c), m, pts).data - base)) <= 1e-12
            assert np.max(np.abs(christoffel_relative(g, m.scaled(c), pts).data - base)) <= 1e-12


# --- covariant derivative ------------------------------------------------------


def test_delta_covariant_derivative_is_partial():
    rng = XorShift64Star(8)
    delta = catalog.builtin("euclidean2").to_metric()
    for variance in ((1, 0), (0, 1), (1, 1), (0, 2)):
        f = catalog.random_field(XY, *variance, rng)
        pts = box_points(rng, [(-1, 1)] * 2, 5)
        np.testing.assert_array_equal(covariant_derivative(delta, f, pts).data, jet(f, pts, 1).d1)


def test_metric_compatibility_on_sphere(sphere):
    nabla = covariant_derivative(sphere, sphere, [math.pi / 3, 0.4])
    assert nabla.max_abs() <= 1e-10
    assert compatibility_residual(sphere, [math.pi / 3, 0.4]) <= 1e-10


def test_constant_vector_on_flat_chart():
    e = catalog.builtin("euclidean2").to_metric()
    v = ExprField(XY, ["1.5", "-2"], 1, 0)
    assert not covariant_derivative(e, v, [0.4, 0.9]).data.any()


def test_covariant_derivative_shapes(polar):
    t = ExprField(polar.chart, [["r", "1"], ["theta", "r*theta"]], 1, 1)
    out = covariant_derivative(polar, t, [[1.0, 0.2], [1.5, 0.3]])
    assert (out.contravariant, out.covariant) == (1, 2)
    assert out.batch_shape == (2,)


def test_covariant_derivative_of_vector_polar(polar):
    # v = (1, 0): v^r_;theta = 0, v^theta_;theta = Gamma^theta_{r theta} = 1/r
    v = ExprField(polar.chart, ["1", "0"], 1, 0)
    d = covariant_derivative(polar, v, [2.0, 0.3]).data
    np.testing.assert_allclose(d, [[0.0, 0.0], [0.0, 0.5]], atol=1e-15)


# --- Theorem 1 and the Gamma cocycle -------------------------------------------


def test_theorem1_same_metric_is_exact(sphere):
    v = ExprField(sphere.chart, ["theta", "sin(phi)"], 1, 0)
    assert theorem1_residual(sphere, sphere, v, [[1.0, 0.2], [2.0, 3.0]]) == 0.0


def test_theorem1_polar_example(polar):
    v = ExprField(polar.chart, ["1", "0"], 1, 0)
    assert theorem1_residual(polar.delta(), polar, v, [2.0, 0.5]) < 1e-10


@pytest.mark.parametrize("mode, tol", [(DiffMode.DUAL, 1e-8), (DiffMode.FD, 1e-4)])
def test_theorem1_random(mode, tol):
    rng = XorShift64Star(31)
    for seed in (1, 2, 3):
        for dim in (2, 3):
            g, m = random_pair(seed, dim)
            v = catalog.random_field(g.chart, 1, 0, rng)
            pts = box_points(rng, BOX3[:dim], 100)
            assert theorem1_residual(g, m, v, pts, mode) < tol


def test_cocycle_gamma_examples(polar, sphere):
    assert cocycle_gamma(sphere, sphere, sphere, [1.0, 2.0]) == 0.0
    d = polar.delta()
    pts = [[0.9, 0.4], [1.3, 2.0]]
    r = cocycle_gamma(d, polar, sphere, pts)
    assert r < 1e-9
    assert cocycle_gamma(polar, sphere, d, pts) == r
    assert cocycle_gamma(sphere, d, polar, pts) == r
