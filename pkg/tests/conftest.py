from __future__ import annotations

import numpy as np
import pytest

from bimetric import catalog, curvature
from bimetric.expr import Binary, Const, Coord, Power, Unary
from bimetric.rng import XorShift64Star


@pytest.fixture
def sign_flip(monkeypatch):
    """Negate the Gamma*Gamma term in the curvature assembly (mutation sanity)."""
    original = curvature._quadratic_term
    monkeypatch.setattr(curvature, "_quadratic_term", lambda gamma: -original(gamma))


@pytest.fixture(scope="session")
def polar():
    return catalog.builtin("polar_flat").to_metric()


@pytest.fixture(scope="session")
def sphere():
    return catalog.builtin("sphere_unit").to_metric()


@pytest.fixture(scope="session")
def poincare():
    return catalog.builtin("poincare_half").to_metric()


def box_points(rng, box, count):
    return np.array([[rng.uniform(lo, hi) for lo, hi in box] for _ in range(count)])


def random_node(rng: XorShift64Star, names, depth: int):
    """Random expression that is smooth and finite on [-1, 1]^n."""
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.6:
            i = rng.randint(len(names))
            return Coord(names[i], i)
        return Const(round(rng.uniform(-2, 2), 3))
    sub = lambda: random_node(rng, names, depth - 1)
    positive = lambda u: Binary("+", Binary("*", u, u), Const(1.0))
    kind = rng.randint(11)
    if kind < 4:
        return Binary("+-*"[kind % 3], sub(), sub())
    if kind == 4:
        return Binary("/", sub(), positive(sub()))
    if kind == 5:
        return Unary(rng.choice(["sin", "cos", "neg"]), sub())
    if kind == 6:
        return Unary("exp", Unary(rng.choice(["sin", "cos"]), sub()))
    if kind == 7:
        return Unary(rng.choice(["log", "sqrt"]), positive(sub()))
    if kind == 8:
        return Power(sub(), float(rng.choice([0, 1, 2, 3])))
    if kind == 9:
        return Power(positive(sub()), rng.choice([0.5, -1.0, -1.5]))
    return Unary(rng.choice(["sinh", "cosh"]), Unary("sin", sub()))
