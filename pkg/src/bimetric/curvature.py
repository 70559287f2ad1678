"""Relative and classic Riemann tensors, contractions and curvature identities.

With every Gamma standing for the relative tensor Gamma(g, m) and ";" for
the g-covariant derivative::

    R^l_ijk(g, m) = Gamma^l_ik;j - Gamma^l_ij;k + Gamma^l_js Gamma^s_ik - Gamma^l_ks Gamma^s_ij

Components are stored as ``data[..., l, i, j, k]``.  The classic curvature of
``m`` is ``R(delta, m)`` where delta is the chart's identity metric; with this
convention the unit sphere diag(1, sin^2 theta) has R^theta_phi,theta,phi =
sin^2 theta and the Ricci tensor is R_ik = R^l_ilk.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connection import (
    CovariantDerivativeField,
    MetricField,
    christoffel_from_partials,
    covariant_derivative_jet,
    pointwise_residual,
    relative_christoffel_jet,
    spd_inverse,
)
from .diff import DiffMode, FieldJet, TensorField, require_compatible
from .errors import ConfigurationError, ShapeError
from .report import ResidualReport
from .tensor import TensorComponents, antisymmetrize_pair, as_points, contract


@dataclass(frozen=True)
class RiemannComponents:
    """R^l_ijk stored as ``values.data[..., l, i, j, k]``."""

    values: TensorComponents
    base_point: np.ndarray

    @property
    def data(self) -> np.ndarray:
        return self.values.data

    def __getitem__(self, index):
        return self.values.data[index]


def _quadratic_term(gamma: np.ndarray) -> np.ndarray:
    """Gamma^l_js Gamma^s_ik, indexed [l, i, j, k]."""
    return np.einsum("...ljs,...sik->...lijk", gamma, gamma)


def riemann_from_jets(gj: FieldJet, mj: FieldJet, m_name: str = "") -> np.ndarray:
    """R(g, m) components from order-2 metric jets."""
    gamma = relative_christoffel_jet(gj, mj, m_name)  # order 1
    gamma_g = christoffel_from_partials(gj.truncate(1))  # order 0
    nabla = covariant_derivative_jet(gamma, gamma_g).value  # [l, i, k, j] = Gamma^l_ik;j
    first = np.swapaxes(nabla, -1, -2) + _quadratic_term(gamma.value)  # [l, i, j, k]
    return antisymmetrize_pair(TensorComponents(first, 1, 3), 2, 3).data


def _riemann_array(g: MetricField, m: MetricField, pts: np.ndarray, mode: DiffMode) -> np.ndarray:
    require_compatible(g, m)
    return riemann_from_jets(g.jet(pts, 2, mode), m.jet(pts, 2, mode), m.name)


def riemann_relative(g: MetricField, m: MetricField, point, mode: DiffMode = DiffMode.DUAL) -> RiemannComponents:
    pts = as_points(point, g.dimension)
    data = _riemann_array(g, m, pts, DiffMode(mode))
    return RiemannComponents(TensorComponents(data, 1, 3), pts)


def riemann_classic(g: MetricField, point, mode: DiffMode = DiffMode.DUAL) -> RiemannComponents:
    """Curvature of ``g`` in its chart, i.e. R(delta, g)."""
    return riemann_relative(g.delta(), g, point, mode)


def ricci(g: MetricField, m: MetricField, point, mode: DiffMode = DiffMode.DUAL) -> TensorComponents:
    """R_ik(g, m) = R^l_ilk(g, m)."""
    return contract(riemann_relative(g, m, point, mode).values, 0, 1)


def scalar_curvature(m: MetricField, point, mode: DiffMode = DiffMode.DUAL) -> np.ndarray | float:
    pts = as_points(point, m.dimension)
    ric = ricci(m.delta(), m, pts, mode).data
    minv = spd_inverse(m.values(pts), m.name)
    s = np.einsum("...ik,...ik->...", minv, ric)
    return float(s) if pts.ndim == 1 else s


def lowered_riemann(m: MetricField, point, mode: DiffMode = DiffMode.DUAL) -> TensorComponents:
    """R_lijk = m_ls R^s_ijk(delta, m)."""
    pts = as_points(point, m.dimension)
    r = riemann_classic(m, pts, mode).data
    return TensorComponents(np.einsum("...ls,...sijk->...lijk", m.values(pts), r), 0, 4)


# --- identities ------------------------------------------------------------


def theorem2_terms(g: MetricField, m: MetricField, points, mode=DiffMode.DUAL):
    pts = as_points(points, g.dimension)
    mode = DiffMode(mode)
    return [
        _riemann_array(g.delta(), m, pts, mode),
        -_riemann_array(g.delta(), g, pts, mode),
        -_riemann_array(g, m, pts, mode),
    ]


def theorem2_residual(g: MetricField, m: MetricField, point, mode: DiffMode = DiffMode.DUAL) -> float:
    """max |R(delta, m) - R(delta, g) - R(g, m)|."""
    residual, _ = pointwise_residual(theorem2_terms(g, m, point, mode), 4)
    return float(np.max(residual))


def cocycle_riemann_terms(m: MetricField, g: MetricField, h: MetricField, points, mode=DiffMode.DUAL):
    pts = as_points(points, m.dimension)
    mode = DiffMode(mode)
    return [_riemann_array(a, b, pts, mode) for a, b in ((m, g), (g, h), (h, m))]


def cocycle_riemann(m: MetricField, g: MetricField, h: MetricField, point, mode: DiffMode = DiffMode.DUAL) -> float:
    residual, _ = pointwise_residual(cocycle_riemann_terms(m, g, h, point, mode), 4)
    return float(np.max(residual))


def ricci_identity_terms(m: MetricField, covector: TensorField, points, mode=DiffMode.DUAL):
    """V_i;jk - V_i;kj (nested covariant derivatives) and -V_l R^l_ijk(delta, m)."""
    if (covector.contravariant, covector.covariant) != (0, 1):
        raise ShapeError("the Ricci identity check needs a covector field")
    pts = as_points(points, m.dimension)
    mode = DiffMode(mode)
    second = CovariantDerivativeField(m, CovariantDerivativeField(m, covector)).jet(pts, 0, mode)
    commutator = antisymmetrize_pair(second.components, 1, 2).data
    r = _riemann_array(m.delta(), m, pts, mode)
    v = covector.jet(pts, 0, mode).value
    return [commutator, -np.einsum("...l,...lijk->...ijk", v, r)]


def ricci_identity_residual(m: MetricField, covector: TensorField, point, mode: DiffMode = DiffMode.DUAL) -> float:
    residual, _ = pointwise_residual(ricci_identity_terms(m, covector, point, mode), 3)
    return float(np.max(residual))


def flatness_terms(g: MetricField, m: MetricField, points, mode=DiffMode.DUAL):
    pts = as_points(points, g.dimension)
    mode = DiffMode(mode)
    return [_riemann_array(g.delta(), g, pts, mode), _riemann_array(g, m, pts, mode)]


def flatness_check(
    g: MetricField,
    m: MetricField,
    sample_points,
    tol: float,
    mode: DiffMode = DiffMode.DUAL,
    seed: int | None = None,
) -> ResidualReport:
    """Sampled test that ``m`` is flat: R(delta, g) + R(g, m) vanishes at every sample.

    Passing is a necessary condition only; it says nothing about points that
    were not sampled.
    """
    pts = np.atleast_2d(as_points(sample_points, g.dimension))
    if pts.shape[0] == 0:
        raise ConfigurationError("flatness check needs at least one sample point")
    mode = DiffMode(mode)
    residual, _ = pointwise_residual(flatness_terms(g, m, pts, mode), 4)
    return ResidualReport.from_residuals(
        "flatness",
        [g.name, m.name],
        mode,
        residual,
        pts,
        tolerance=tol,
        base_tolerance=tol,
        seed=seed,
    )
