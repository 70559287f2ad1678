from __future__ import annotations

import math

import numpy as np
import pytest

from bimetric import catalog
from bimetric.curvature import (
    cocycle_riemann,
    flatness_check,
    lowered_riemann,
    ricci,
    ricci_identity_residual,
    ricci_identity_terms,
    riemann_classic,
    riemann_relative,
    scalar_curvature,
    theorem2_residual,
)
from bimetric.diff import DiffMode, ExprField
from bimetric.errors import ConfigurationError
from bimetric.rng import XorShift64Star
from bimetric.tensor import contract

from conftest import box_points

BOX3 = [(-1.0, 1.0)] * 3


def random_pair(seed, dim):
    return (catalog.random_metric(dim, seed).to_metric(), catalog.random_metric(dim, seed + 1000).to_metric())


def sphere_points(rng, count):
    return box_points(rng, [(0.3, math.pi - 0.3), (0.0, 2 * math.pi)], count)


# --- closed forms ----------------------------------------------------------------


def test_sphere_riemann_component(sphere):
    r = riemann_classic(sphere, [math.pi / 3, 0.2])
    assert r[0, 1, 0, 1] == pytest.approx(0.75, abs=1e-12)
    assert r[0, 1, 1, 0] == pytest.approx(-0.75, abs=1e-12)
    assert r[1, 0, 1, 0] == pytest.approx(1.0, abs=1e-12)


def test_poincare_riemann_component(poincare):
    r = riemann_classic(poincare, [0.3, 2.0])
    assert r[0, 1, 0, 1] == pytest.approx(-0.25, abs=1e-12)


def test_polar_is_flat(polar):
    rng = XorShift64Star(1)
    pts = box_points(rng, [(0.5, 2.0), (0.0, 2 * math.pi)], 20)
    assert riemann_classic(polar, pts).values.max_abs() <= 1e-9
    assert np.max(np.abs(scalar_curvature(polar, pts))) <= 1e-8


def test_sphere_ricci_equals_metric(sphere):
    rng = XorShift64Star(2)
    pts = sphere_points(rng, 10)
    ric = ricci(sphere.delta(), sphere, pts)
    np.testing.assert_allclose(ric.data, sphere.values(pts), atol=1e-12)
    # Ricci is the (l, j) contraction of R^l_ijk
    np.testing.assert_array_equal(contract(riemann_classic(sphere, pts).values, 0, 1).data, ric.data)


def test_scalar_curvatures(sphere, poincare):
    rng = XorShift64Star(3)
    np.testing.assert_allclose(scalar_curvature(sphere, sphere_points(rng, 20)), 2.0, atol=1e-6)
    pts = box_points(rng, [(-1.0, 1.0), (0.5, 2.0)], 20)
    np.testing.assert_allclose(scalar_curvature(poincare, pts), -2.0, atol=1e-6)
    assert isinstance(scalar_curvature(sphere, [1.0, 1.0]), float)


def test_relative_self_is_zero(sphere):
    r = riemann_relative(sphere, sphere, [1.2, 0.3])
    assert not r.data.any()
    assert not ricci(sphere, sphere, [1.2, 0.3]).data.any()


def test_relative_from_delta_matches_classic(sphere):
    pts = [[1.0, 0.5], [2.0, 1.0]]
    np.testing.assert_array_equal(riemann_relative(sphere.delta(), sphere, pts).data, riemann_classic(sphere, pts).data)


def test_roughness_zero_is_flat():
    for dim in (2, 3):
        m = catalog.random_metric(dim, 4, roughness=0).to_metric()
        assert riemann_classic(m, [0.1, 0.2, 0.3][:dim]).values.max_abs() <= 1e-9


# --- algebraic symmetries -----------------------------------------------------------


@pytest.mark.parametrize("dim", [2, 3])
def test_antisymmetry_and_bianchi(dim):
    rng = XorShift64Star(10 + dim)
    for seed in (1, 2, 3, 4):
        g, m = random_pair(seed, dim)
        pts = box_points(rng, BOX3[:dim], 20)
        for r in (riemann_classic(g, pts).data, riemann_relative(g, m, pts).data):
            assert np.max(np.abs(r + np.swapaxes(r, -1, -2))) <= 1e-9
            cyclic = r + np.einsum("...lijk->...lkij", r) + np.einsum("...lijk->...ljki", r)
            assert np.max(np.abs(cyclic)) <= 1e-8


@pytest.mark.parametrize("dim", [2, 3])
def test_lowered_pair_symmetry(dim):
    rng = XorShift64Star(20 + dim)
    for seed in (1, 2, 3):
        m = catalog.random_metric(dim, seed).to_metric()
        pts = box_points(rng, BOX3[:dim], 20)
        low = lowered_riemann(m, pts).data
        assert np.max(np.abs(low - np.einsum("...lijk->...jkli", low))) <= 1e-8
        assert np.max(np.abs(low + np.einsum("...lijk->...iljk", low))) <= 1e-8


@pytest.mark.parametrize("c", [0.5, 2.0])
def test_rescaling_invariance(c):
    rng = XorShift64Star(7)
    for seed in (1, 2):
        for dim in (2, 3):
            g, m = random_pair(seed, dim)
            pts = box_points(rng, BOX3[:dim], 10)
            base = riemann_relative(g, m, pts).data
            assert np.max(np.abs(riemann_relative(g.scaled(c), m, pts).data - base)) <= 1e-10
            assert np.max(np.abs(riemann_relative(g, m.scaled(c), pts).data - base)) <= 1e-10


# --- identities ------------------------------------------------------------------


@pytest.mark.parametrize("mode, tol", [(DiffMode.DUAL, 1e-7), (DiffMode.FD, 1e-4)])
def test_theorem2_random(mode, tol):
    rng = XorShift64Star(40)
    for seed in range(1, 6):
        for dim in (2, 3):
            g, m = random_pair(seed, dim)
            assert theorem2_residual(g, m, box_points(rng, BOX3[:dim], 20), mode) <= tol


def test_theorem2_polar_sphere(polar, sphere):
    rng = XorShift64Star(41)
    pts = box_points(rng, [(0.5, 2.0), (0.0, 2 * math.pi)], 50)
    assert theorem2_residual(polar, sphere, pts) <= 1e-7


def test_cocycle_riemann(polar, sphere):
    assert cocycle_riemann(sphere, sphere, sphere, [1.0, 0.0]) == 0.0
    h = catalog.random_metric(2, 9).to_metric()
    pts = [[0.7, 0.3], [0.9, -0.5]]
    r = cocycle_riemann(polar, sphere, h, pts)
    assert r <= 1e-7
    assert cocycle_riemann(sphere, h, polar, pts) == r
    assert cocycle_riemann(h, polar, sphere, pts) == r


def test_ricci_cocycle():
    rng = XorShift64Star(42)
    for seed in (1, 2, 3):
        a, b, c = (catalog.random_metric(3, seed + k * 100).to_metric() for k in range(3))
        pts = box_points(rng, BOX3, 10)
        total = ricci(a, b, pts).data + ricci(b, c, pts).data + ricci(c, a, pts).data
        assert np.max(np.abs(total)) <= 1e-7


def test_ricci_identity_examples(sphere):
    e = catalog.builtin("euclidean2").to_metric()
    v = ExprField(e.chart, ["x*y", "sin(x)"], 0, 1)
    assert ricci_identity_residual(e, v, [0.3, 0.4]) <= 1e-10
    const = ExprField(sphere.chart, ["1", "0"], 0, 1)
    assert ricci_identity_residual(sphere, const, [math.pi / 4, 0.0]) <= 1e-8
    assert ricci_identity_residual(sphere, const, [math.pi / 4, 0.0], DiffMode.FD) <= 1e-4


def test_ricci_identity_random():
    rng = XorShift64Star(43)
    for seed in (1, 2, 3):
        for dim in (2, 3):
            m = catalog.random_metric(dim, seed).to_metric()
            v = catalog.random_field(m.chart, 0, 1, rng)
            assert ricci_identity_residual(m, v, box_points(rng, BOX3[:dim], 50)) <= 1e-7


def test_ricci_identity_is_not_trivial(sphere):
    # the curvature side is far from zero, so agreement is meaningful
    v = ExprField(sphere.chart, ["cos(phi)", "theta"], 0, 1)
    commutator, neg_curv = ricci_identity_terms(sphere, v, [[1.0, 0.5]])
    assert np.max(np.abs(commutator)) > 0.1


# --- flatness ------------------------------------------------------------------


def test_flatness_examples(polar, sphere):
    rng = XorShift64Star(44)
    pts = box_points(rng, [(0.5, 2.0), (0.3, 2.8)], 20)
    ok = flatness_check(sphere, polar, pts, 1e-7)
    assert ok.passed and ok.samples == 20
    bad = flatness_check(polar, sphere, pts[:, ::-1], 1e-7)
    assert not bad.passed
    assert bad.max_residual >= 0.1
    assert bad.max_residual <= 1.0 + 1e-12  # |R| of the unit sphere is at most 1
    d = polar.delta()
    zero = flatness_check(d, d, pts, 1e-7)
    assert zero.passed and zero.max_residual == 0.0


def test_flatness_needs_samples(polar):
    with pytest.raises(ConfigurationError):
        flatness_check(polar, polar, np.empty((0, 2)), 1e-7)


def test_sign_flip_breaks_theorem2(sign_flip):
    g, m = random_pair(1, 3)
    pts = box_points(XorShift64Star(1), BOX3, 10)
    assert theorem2_residual(g, m, pts) > 1e-3
