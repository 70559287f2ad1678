"""Metrics, relative Christoffel tensors and covariant derivatives.

``christoffel_relative(g, m)`` returns the difference between the
Levi-Civita connections of ``m`` and ``g`` as a genuine (1,2) tensor,
computed only from g-covariant derivatives of ``m``::

    Gamma^a_bc(g, m) = 1/2 m^an (m_nb;c + m_nc;b - m_bc;n)

With ``g`` the chart's Euclidean metric (identity components) the covariant
derivative is the plain partial derivative and the ordinary Christoffel
symbols of ``m`` come out.  Covariant derivatives of (p, q) fields use one
correction term per slot: ``+Gamma`` for each contravariant slot and
``-Gamma`` for each covariant slot, with the derivative index last.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .diff import (
    DiffMode,
    ExprField,
    FieldJet,
    TensorField,
    jeinsum,
    jinv,
    require_compatible,
)
from .errors import NotPositiveDefiniteError, ShapeError
from .expr import Binary, Const, parse, to_source
from .tensor import ChartSpec, TensorComponents, as_points

CONDITION_WARN = 1e8


class IllConditionedMetricWarning(UserWarning):
    pass


class MetricField(ExprField):
    """Symmetric positive-definite (0,2) field given by component expressions."""

    def __init__(self, chart: ChartSpec, components, name: str = "", sample_region=None, notes: str = ""):
        super().__init__(chart, components, 0, 2)
        n = chart.dimension
        for a in range(n):
            for b in range(a + 1, n):
                if self.components[a, b] != self.components[b, a]:
                    raise ShapeError(
                        f"metric {name or '<unnamed>'} is not symmetric: component [{a}][{b}] "
                        f"{self.components[a, b].source!r} != [{b}][{a}] {self.components[b, a].source!r}"
                    )
                # store the upper triangle once
                self.components[b, a] = self.components[a, b]
        self.name = name
        self.sample_region = None if sample_region is None else [tuple(map(float, r)) for r in sample_region]
        self.notes = notes

    def jet(self, points, order: int = 0, mode: DiffMode = DiffMode.DUAL) -> FieldJet:
        j = super().jet(points, order, mode)
        check_positive_definite(j.value, self.name)
        return j

    def delta(self) -> "MetricField":
        """The chart-induced Euclidean metric: identity components on this chart."""
        d = self.__dict__.get("_delta")
        if d is None:
            n = self.dimension
            comps = [["1" if a == b else "0" for b in range(n)] for a in range(n)]
            d = MetricField(self.chart, comps, name=f"delta[{self.name}]", sample_region=self.sample_region)
            self._delta = d
        return d

    def scaled(self, factor: float) -> "MetricField":
        c = Const(float(factor))
        n = self.dimension
        comps = [
            [parse(to_source(Binary("*", c, self.components[a, b].root)), self.chart) for b in range(n)]
            for a in range(n)
        ]
        return MetricField(self.chart, comps, name=f"{factor}*{self.name}", sample_region=self.sample_region)

    def __repr__(self) -> str:
        return f"MetricField({self.name!r}, coordinates={self.chart.coordinate_names})"


def check_positive_definite(values: np.ndarray, name: str = "") -> None:
    try:
        np.linalg.cholesky(values)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"metric {name or '<unnamed>'} is not positive definite") from exc


def spd_inverse(values: np.ndarray, name: str = "") -> np.ndarray:
    """Inverse of a batch of metric matrices (LU with partial pivoting).

    Positivity is checked first by a Cholesky factorization; a condition
    number above ``CONDITION_WARN`` triggers a warning.
    """
    check_positive_definite(values, name)
    cond = np.linalg.cond(values)
    if np.any(cond > CONDITION_WARN):
        warnings.warn(
            f"metric {name or '<unnamed>'} is ill-conditioned (condition number {float(np.max(cond)):.3g})",
            IllConditionedMetricWarning,
            stacklevel=3,
        )
    return np.linalg.inv(values)


def inverse_metric(m: MetricField, point) -> TensorComponents:
    values = m.values(as_points(point, m.dimension))
    return TensorComponents(spd_inverse(values, m.name), 2, 0)


@dataclass(frozen=True)
class ChristoffelComponents:
    """Gamma^a_bc stored as ``values.data[..., a, b, c]``."""

    values: TensorComponents
    base_point: np.ndarray

    @property
    def data(self) -> np.ndarray:
        return self.values.data

    def __getitem__(self, index):
        return self.values.data[index]


# --- jet-level building blocks ---------------------------------------------


def _metric_inverse_jet(mj: FieldJet, name: str = "") -> FieldJet:
    return jinv(mj, spd_inverse(mj.value, name))


def christoffel_from_partials(gj: FieldJet) -> FieldJet:
    """Ordinary Christoffel symbols of a metric jet (one order lower)."""
    k = gj.order - 1
    dg = gj.shift()  # dg[n,b,c] = d_c g_nb
    lowered = (
        dg
        + jeinsum("ncb->nbc", dg, variance=(0, 3))
        - jeinsum("bcn->nbc", dg, variance=(0, 3))
    )
    ginv = jinv(gj.truncate(k), spd_inverse(gj.value))
    return 0.5 * jeinsum("an,nbc->abc", ginv, lowered, variance=(1, 2))


def covariant_derivative_jet(tj: FieldJet, gamma: FieldJet) -> FieldJet:
    """Covariant derivative of a field jet given the connection jet (one order lower)."""
    p, q = tj.contravariant, tj.covariant
    rank = p + q
    slots = "abcdefgh"[:rank]
    out = tj.shift()
    for s in range(rank):
        src = slots[:s] + "w" + slots[s + 1:]
        if s < p:
            term = jeinsum(f"{slots[s]}wv,{src}->{slots}v", gamma, tj, variance=(p, q + 1))
            out = out + term
        else:
            term = jeinsum(f"w{slots[s]}v,{src}->{slots}v", gamma, tj, variance=(p, q + 1))
            out = out - term
    return out


def _same_jet(a: FieldJet, b: FieldJet) -> bool:
    return all(
        (x is None and y is None) or (x is not None and y is not None and np.array_equal(x, y))
        for x, y in ((a.value, b.value), (a.d1, b.d1), (a.d2, b.d2))
    )


def relative_christoffel_jet(gj: FieldJet, mj: FieldJet, m_name: str = "") -> FieldJet:
    """Gamma(g, m) from metric jets of order k+1; the result has order k."""
    k = min(gj.order, mj.order) - 1
    gj, mj = gj.truncate(k + 1), mj.truncate(k + 1)
    if _same_jet(gj, mj):
        # Gamma(m, m) vanishes identically; return it without rounding noise
        _metric_inverse_jet(mj.truncate(k), m_name)  # still validate m
        n = mj.dimension
        shape = mj.value.shape[:-2] + (n, n, n)
        d1 = np.zeros(shape + (n,)) if k >= 1 else None
        d2 = np.zeros(shape + (n, n)) if k >= 2 else None
        return FieldJet(np.zeros(shape), d1, d2, 1, 2, n)
    gamma_g = christoffel_from_partials(gj)
    dm = covariant_derivative_jet(mj, gamma_g)  # dm[n,b,c] = m_nb;c
    # m_nb;c is symmetric in n, b; enforce it bitwise so Gamma^a_bc = Gamma^a_cb exactly
    dm = 0.5 * (dm + jeinsum("bnc->nbc", dm, variance=(0, 3)))
    lowered = (
        dm
        + jeinsum("ncb->nbc", dm, variance=(0, 3))
        - jeinsum("bcn->nbc", dm, variance=(0, 3))
    )
    minv = _metric_inverse_jet(mj.truncate(k), m_name)
    return 0.5 * jeinsum("an,nbc->abc", minv, lowered, variance=(1, 2))


# --- derived fields --------------------------------------------------------


class RelativeChristoffelField(TensorField):
    """Gamma(g, m) as a (1,2) tensor field that can itself be differentiated."""

    def __init__(self, g: MetricField, m: MetricField):
        self.chart = require_compatible(g, m)
        self.g, self.m = g, m
        self.contravariant, self.covariant = 1, 2

    def jet(self, points, order: int = 0, mode: DiffMode = DiffMode.DUAL) -> FieldJet:
        if order + 1 > 2:
            raise ValueError("relative Christoffel jets are available up to order 1")
        pts = as_points(points, self.dimension)
        gj = self.g.jet(pts, order + 1, mode)
        mj = self.m.jet(pts, order + 1, mode)
        return relative_christoffel_jet(gj, mj, self.m.name)


class CovariantDerivativeField(TensorField):
    """The g-covariant derivative of a (p, q) field, as a (p, q+1) field."""

    def __init__(self, g: MetricField, field: TensorField):
        self.chart = require_compatible(g, field)
        self.g, self.field = g, field
        self.contravariant = field.contravariant
        self.covariant = field.covariant + 1
        if self.contravariant + self.covariant > 4:
            raise ShapeError("covariant derivative would exceed the supported rank")

    def jet(self, points, order: int = 0, mode: DiffMode = DiffMode.DUAL) -> FieldJet:
        if order + 1 > 2:
            raise ValueError("covariant derivative jets are available up to order 1")
        pts = as_points(points, self.dimension)
        tj = self.field.jet(pts, order + 1, mode)
        gamma = christoffel_from_partials(self.g.jet(pts, order + 1, mode))
        return covariant_derivative_jet(tj, gamma)


# --- public operations -----------------------------------------------------


def christoffel_relative(g: MetricField, m: MetricField, point, mode: DiffMode = DiffMode.DUAL) -> ChristoffelComponents:
    pts = as_points(point, g.dimension)
    gamma = RelativeChristoffelField(g, m).jet(pts, 0, DiffMode(mode))
    return ChristoffelComponents(gamma.components, pts)


def christoffel_classic(g: MetricField, point, mode: DiffMode = DiffMode.DUAL, method: str = "direct") -> ChristoffelComponents:
    """Christoffel symbols of ``g`` in its chart.

    ``method="direct"`` applies the partial-derivative formula;
    ``method="relative"`` computes Gamma(delta, g) through the covariant
    derivative machinery.  The two must agree.
    """
    pts = as_points(point, g.dimension)
    if method == "relative":
        return christoffel_relative(g.delta(), g, pts, mode)
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    gamma = christoffel_from_partials(g.jet(pts, 1, DiffMode(mode)))
    return ChristoffelComponents(gamma.components, pts)


def covariant_derivative(g: MetricField, field: TensorField, point, mode: DiffMode = DiffMode.DUAL) -> TensorComponents:
    """Components of the g-covariant derivative of ``field``; derivative index last."""
    return CovariantDerivativeField(g, field).jet(point, 0, DiffMode(mode)).components


def _max_abs(arr: np.ndarray, rank: int) -> np.ndarray:
    """Per-point max |component| (reduces the trailing ``rank`` axes)."""
    if rank == 0:
        return np.abs(arr)
    return np.max(np.abs(arr), axis=tuple(range(-rank, 0)))


def pointwise_residual(terms: list[np.ndarray], rank: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-point max |sum of terms| and per-point largest term magnitude."""
    # summing the sorted terms makes the result independent of term order
    total = np.sort(np.stack(terms), axis=0).sum(axis=0)
    residual = _max_abs(total, rank)
    scale = np.max(np.stack([_max_abs(t, rank) for t in terms]), axis=0)
    return residual, scale


def theorem1_terms(g: MetricField, m: MetricField, v: TensorField, points, mode=DiffMode.DUAL):
    """v^a_;b(m) and the two pieces of v^a_;b(g) + Gamma^a_cb(g,m) v^c, computed separately."""
    pts = as_points(points, g.dimension)
    mode = DiffMode(mode)
    if (v.contravariant, v.covariant) != (1, 0):
        raise ShapeError("the theorem1 check needs a vector field")
    lhs = CovariantDerivativeField(m, v).jet(pts, 0, mode).value
    via_g = CovariantDerivativeField(g, v).jet(pts, 0, mode).value
    gamma = RelativeChristoffelField(g, m).jet(pts, 0, mode).value
    vv = v.jet(pts, 0, mode).value
    correction = np.einsum("...acb,...c->...ab", gamma, vv)
    return [lhs, -via_g, -correction]


def theorem1_residual(g: MetricField, m: MetricField, v: TensorField, point, mode: DiffMode = DiffMode.DUAL) -> float:
    residual, _ = pointwise_residual(theorem1_terms(g, m, v, point, mode), 2)
    return float(np.max(residual))


def cocycle_gamma_terms(m: MetricField, g: MetricField, h: MetricField, points, mode=DiffMode.DUAL):
    pts = as_points(points, m.dimension)
    mode = DiffMode(mode)
    return [RelativeChristoffelField(a, b).jet(pts, 0, mode).value for a, b in ((m, g), (g, h), (h, m))]


def cocycle_gamma(m: MetricField, g: MetricField, h: MetricField, point, mode: DiffMode = DiffMode.DUAL) -> float:
    residual, _ = pointwise_residual(cocycle_gamma_terms(m, g, h, point, mode), 3)
    return float(np.max(residual))


def compatibility_terms(m: MetricField, points, mode=DiffMode.DUAL):
    """Partials of m and the connection corrections; they sum to m_ab;c(m)."""
    pts = as_points(points, m.dimension)
    mode = DiffMode(mode)
    nabla = CovariantDerivativeField(m, m).jet(pts, 0, mode).value
    partials = m.jet(pts, 1, mode).d1
    return [partials, nabla - partials]


def compatibility_residual(m: MetricField, point, mode: DiffMode = DiffMode.DUAL) -> float:
    residual, _ = pointwise_residual(compatibility_terms(m, point, mode), 3)
    return float(np.max(residual))
