"""Derivatives of tensor fields: exact (dual numbers) or central differences.

A :class:`FieldJet` holds a field's components together with its first and
(optionally) second partial derivatives at a batch of points.  Derivative
slots are appended after the tensor slots, so for a metric jet
``d1[..., a, b, c]`` is the partial of m_ab along coordinate c and
``d2[..., a, b, c, d]`` the second partial along c and d.

Jets compose: :func:`jeinsum` multiplies jets with the product rule and
:func:`jinv` inverts a matrix jet, so any closure built from them (relative
Christoffel tensors, covariant derivatives) is differentiated exactly in the
same pass that evaluates it.
"""

from __future__ import annotations

import enum
from typing import Sequence

import numpy as np

from .errors import ChartMismatchError, DomainError, ShapeError, SingularPointError
from .expr import Binary, Const, Expression, evaluate, evaluate_many, parse, to_source
from .tensor import MAX_RANK, ChartSpec, TensorComponents, as_points

EPS = np.finfo(np.float64).eps


class DiffMode(str, enum.Enum):
    DUAL = "dual"
    FD = "fd"


def fd_step(x, order: int) -> np.ndarray:
    """Central-difference step: eps^(1/3) for first, eps^(1/4) for second derivatives."""
    power = 1.0 / 3.0 if order == 1 else 0.25
    return EPS**power * np.maximum(1.0, np.abs(x))


class FieldJet:
    """Components of a (p, q) field plus partial derivatives up to ``order``."""

    __slots__ = ("value", "d1", "d2", "contravariant", "covariant", "dimension")

    def __init__(self, value, d1=None, d2=None, contravariant: int = 0, covariant: int = 0, dimension=None):
        if d1 is None and d2 is not None:
            raise ValueError("second partials without first partials")
        self.value = np.asarray(value, dtype=np.float64)
        self.d1 = d1
        self.d2 = d2
        self.contravariant = contravariant
        self.covariant = covariant
        if dimension is None:
            if d1 is not None:
                dimension = d1.shape[-1]
            elif contravariant + covariant:
                dimension = self.value.shape[-1]
        self.dimension = dimension

    @property
    def order(self) -> int:
        return 0 if self.d1 is None else 1 if self.d2 is None else 2

    @property
    def rank(self) -> int:
        return self.contravariant + self.covariant

    @property
    def components(self) -> TensorComponents:
        return TensorComponents(self.value, self.contravariant, self.covariant, self.dimension)

    @property
    def partials(self) -> TensorComponents:
        if self.d1 is None:
            raise ValueError("jet has no first partials")
        return TensorComponents(self.d1, self.contravariant, self.covariant + 1)

    @property
    def second_partials(self) -> TensorComponents:
        if self.d2 is None:
            raise ValueError("jet has no second partials")
        return TensorComponents(self.d2, self.contravariant, self.covariant + 2)

    def _with(self, value, d1, d2, contravariant=None, covariant=None) -> "FieldJet":
        return FieldJet(
            value,
            d1,
            d2,
            self.contravariant if contravariant is None else contravariant,
            self.covariant if covariant is None else covariant,
            self.dimension,
        )

    def truncate(self, order: int) -> "FieldJet":
        if order > self.order:
            raise ValueError(f"cannot raise jet order from {self.order} to {order}")
        return self._with(self.value, self.d1 if order >= 1 else None, self.d2 if order >= 2 else None)

    def shift(self) -> "FieldJet":
        """The jet of the partial-derivative field (one extra covariant slot, one order less)."""
        if self.d1 is None:
            raise ValueError("order-0 jet has no derivative field")
        return FieldJet(self.d1, self.d2, None, self.contravariant, self.covariant + 1, self.dimension)

    def _binary(self, other: "FieldJet", op) -> "FieldJet":
        if (other.contravariant, other.covariant) != (self.contravariant, self.covariant):
            raise ShapeError("cannot combine jets of different variance")
        order = min(self.order, other.order)
        d1 = op(self.d1, other.d1) if order >= 1 else None
        d2 = op(self.d2, other.d2) if order >= 2 else None
        return self._with(op(self.value, other.value), d1, d2)

    def __add__(self, other: "FieldJet") -> "FieldJet":
        return self._binary(other, np.add)

    def __sub__(self, other: "FieldJet") -> "FieldJet":
        return self._binary(other, np.subtract)

    def __neg__(self) -> "FieldJet":
        return self * -1.0

    def __mul__(self, scalar: float) -> "FieldJet":
        s = float(scalar)
        return self._with(
            self.value * s,
            None if self.d1 is None else self.d1 * s,
            None if self.d2 is None else self.d2 * s,
        )

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"FieldJet(({self.contravariant},{self.covariant}), order={self.order}, shape={self.value.shape})"


def jeinsum(subscripts: str, *operands, variance: tuple[int, int]) -> FieldJet:
    """Einstein summation over tensor slots with product-rule derivatives.

    ``subscripts`` names tensor slots only (lower-case letters); batch axes
    and derivative slots are handled here.  Operands may be jets or constant
    arrays without batch axes.
    """
    inputs, output = subscripts.replace(" ", "").split("->")
    specs = inputs.split(",")
    if len(specs) != len(operands):
        raise ValueError("subscripts do not match operand count")
    jets = [k for k, op in enumerate(operands) if isinstance(op, FieldJet)]
    order = min((operands[k].order for k in jets), default=0)
    values = [op.value if isinstance(op, FieldJet) else np.asarray(op) for op in operands]

    def term(overrides: dict[int, tuple[np.ndarray, str]], extra: str) -> np.ndarray:
        parts, arrays = [], []
        for k, spec in enumerate(specs):
            arr, suffix = overrides.get(k, (values[k], ""))
            parts.append("..." + spec + suffix)
            arrays.append(arr)
        return np.einsum(",".join(parts) + "->..." + output + extra, *arrays)

    value = term({}, "")
    d1 = d2 = None
    if order >= 1:
        d1 = sum(term({k: (operands[k].d1, "Y")}, "Y") for k in jets)
    if order >= 2:
        d2 = sum(term({k: (operands[k].d2, "YZ")}, "YZ") for k in jets)
        for i in jets:
            for j in jets:
                if i != j:
                    d2 = d2 + term({i: (operands[i].d1, "Y"), j: (operands[j].d1, "Z")}, "YZ")
    dims = [operands[k].dimension for k in jets if operands[k].dimension is not None]
    return FieldJet(value, d1, d2, *variance, dimension=dims[0] if dims else None)


def jinv(j: FieldJet, inverse: np.ndarray | None = None) -> FieldJet:
    """Jet of the matrix inverse of a (0,2) jet; the result is (2,0).

    ``inverse`` may supply an already validated inverse of ``j.value``.
    """
    inv = np.linalg.inv(j.value) if inverse is None else inverse
    d1 = d2 = None
    if j.order >= 1:
        d1 = -np.einsum("...an,...nmY,...mb->...abY", inv, j.d1, inv)
    if j.order >= 2:
        left = np.einsum("...an,...nmY,...mk,...klZ,...lb->...abYZ", inv, j.d1, inv, j.d1, inv)
        d2 = left + np.swapaxes(left, -1, -2) - np.einsum("...an,...nmYZ,...mb->...abYZ", inv, j.d2, inv)
    return FieldJet(inv, d1, d2, 2, 0)


def _bcast(h: np.ndarray, rank: int) -> np.ndarray:
    return h.reshape(h.shape + (1,) * rank)


def fd_jet(values_fn, points: np.ndarray, order: int, rank: int) -> tuple:
    """Central-difference jet of ``values_fn`` (points -> components) at ``points``.

    All stencil points are evaluated in one batched call.  The stencil is
    never one-sided: if a stencil point leaves the domain, ``values_fn``
    raises and so does this function.
    """
    x = points
    n = x.shape[-1]
    if order == 0:
        return values_fn(x), None, None
    stencil = [x]
    h1 = fd_step(x, 1)
    for i in range(n):
        for sign in (1.0, -1.0):
            p = x.copy()
            p[..., i] += sign * h1[..., i]
            stencil.append(p)
    if order >= 2:
        h2 = fd_step(x, 2)
        for i in range(n):
            for sign in (1.0, -1.0):
                p = x.copy()
                p[..., i] += sign * h2[..., i]
                stencil.append(p)
        for i in range(n):
            for j in range(i + 1, n):
                for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                    p = x.copy()
                    p[..., i] += si * h2[..., i]
                    p[..., j] += sj * h2[..., j]
                    stencil.append(p)
    f = values_fn(np.stack(stencil))
    f0 = f[0]
    d1 = np.empty(f0.shape + (n,))
    k = 1
    for i in range(n):
        step = (x[..., i] + h1[..., i]) - (x[..., i] - h1[..., i])
        d1[..., i] = (f[k] - f[k + 1]) / _bcast(step, rank)
        k += 2
    if order == 1:
        return f0, d1, None
    d2 = np.empty(f0.shape + (n, n))
    for i in range(n):
        hi = _bcast(h2[..., i], rank)
        d2[..., i, i] = (f[k] - 2.0 * f0 + f[k + 1]) / (hi * hi)
        k += 2
    for i in range(n):
        for j in range(i + 1, n):
            hij = _bcast(4.0 * h2[..., i] * h2[..., j], rank)
            mixed = (f[k] - f[k + 1] - f[k + 2] + f[k + 3]) / hij
            d2[..., i, j] = mixed
            d2[..., j, i] = mixed
            k += 4
    return f0, d1, d2


def check_domain(chart: ChartSpec, points: np.ndarray) -> None:
    """Raise :class:`SingularPointError` unless every point passes the chart's guard."""
    guard = chart.domain_guard
    if guard is None:
        return
    try:
        value = np.asarray(evaluate(guard, points))
    except DomainError as exc:
        raise SingularPointError(f"domain guard {guard.source!r} is undefined: {exc}") from exc
    bad = value <= 0
    if np.any(bad):
        point = points[tuple(np.argwhere(np.broadcast_to(bad, points.shape[:-1]))[0])] if bad.ndim else points
        raise SingularPointError(f"point outside the domain guard {guard.source!r}", point=point)


class TensorField:
    """A (p, q) tensor field on a chart that can produce jets at points."""

    chart: ChartSpec
    contravariant: int
    covariant: int

    @property
    def dimension(self) -> int:
        return self.chart.dimension

    @property
    def rank(self) -> int:
        return self.contravariant + self.covariant

    def jet(self, points, order: int = 0, mode: DiffMode = DiffMode.DUAL) -> FieldJet:
        raise NotImplementedError

    def __call__(self, points) -> TensorComponents:
        return self.jet(points, 0).components


def _as_object_array(components, rank: int, chart: ChartSpec) -> np.ndarray:
    n = chart.dimension
    arr = np.empty((n,) * rank, dtype=object)
    src = np.array(components, dtype=object) if rank else None
    if rank and src.shape != (n,) * rank:
        raise ShapeError(f"expected components of shape {(n,) * rank}, got {src.shape}")
    for idx in np.ndindex(*arr.shape):
        item = src[idx] if rank else components
        if isinstance(item, Expression):
            if not item.chart.compatible(chart):
                raise ChartMismatchError("component expression belongs to a different chart")
            arr[idx] = item
        else:
            arr[idx] = parse(str(item), chart)
    return arr


class ExprField(TensorField):
    """Tensor field whose components are parsed expressions."""

    def __init__(self, chart: ChartSpec, components, contravariant: int = 0, covariant: int = 0):
        if contravariant + covariant > MAX_RANK:
            raise ShapeError(f"rank above {MAX_RANK} is not supported")
        self.chart = chart
        self.contravariant = contravariant
        self.covariant = covariant
        self.components = _as_object_array(components, contravariant + covariant, chart)

    _JET_CACHE_SIZE = 4

    def values(self, points) -> np.ndarray:
        """Plain component values at a batch of points (guard enforced)."""
        pts = as_points(points, self.dimension)
        check_domain(self.chart, pts)
        results = evaluate_many(self.components.flat, pts)
        out = np.empty(pts.shape[:-1] + self.components.shape)
        for idx, r in zip(np.ndindex(*self.components.shape), results):
            out[(...,) + idx] = r.value
        return out

    def jet(self, points, order: int = 0, mode: DiffMode = DiffMode.DUAL) -> FieldJet:
        if order not in (0, 1, 2):
            raise ValueError("jet order must be 0, 1 or 2")
        pts = as_points(points, self.dimension)
        mode = DiffMode(mode)
        # fields are immutable, so jets at the same points can be reused
        key = (pts.shape, pts.tobytes(), order, mode)
        cache = self.__dict__.setdefault("_jet_cache", {})
        hit = cache.get(key)
        if hit is None:
            hit = self._jet(pts, order, mode)
            for arr in (hit.value, hit.d1, hit.d2):
                if isinstance(arr, np.ndarray):
                    arr.flags.writeable = False
            if len(cache) >= self._JET_CACHE_SIZE:
                cache.pop(next(iter(cache)))
            cache[key] = hit
        return hit

    def _jet(self, pts: np.ndarray, order: int, mode: DiffMode) -> FieldJet:
        if order == 0:
            return FieldJet(self.values(pts), None, None, self.contravariant, self.covariant, self.dimension)
        if mode is DiffMode.FD:
            value, d1, d2 = fd_jet(self.values, pts, order, self.rank)
            return FieldJet(value, d1, d2, self.contravariant, self.covariant, self.dimension)
        check_domain(self.chart, pts)
        n = self.dimension
        results = evaluate_many(self.components.flat, pts, derivatives=True)
        shape = pts.shape[:-1] + self.components.shape
        value = np.empty(shape)
        d1 = np.empty(shape + (n,))
        d2 = np.empty(shape + (n, n)) if order == 2 else None
        for idx, r in zip(np.ndindex(*self.components.shape), results):
            value[(...,) + idx] = r.value
            d1[(...,) + idx + (slice(None),)] = r.first
            if d2 is not None:
                d2[(...,) + idx + (slice(None), slice(None))] = r.second
        return FieldJet(value, d1, d2, self.contravariant, self.covariant, self.dimension)

    def _map(self, fn) -> np.ndarray:
        out = np.empty(self.components.shape, dtype=object)
        for idx in np.ndindex(*self.components.shape):
            out[idx] = fn(idx)
        return out

    def _rebuild(self, node) -> Expression:
        return parse(to_source(node), self.chart)

    def __add__(self, other: "ExprField") -> "ExprField":
        if (other.contravariant, other.covariant) != (self.contravariant, self.covariant):
            raise ShapeError("cannot add fields of different variance")
        if not self.chart.compatible(other.chart):
            raise ChartMismatchError("cannot add fields on different charts")
        comps = self._map(
            lambda idx: self._rebuild(Binary("+", self.components[idx].root, other.components[idx].root))
        )
        return ExprField(self.chart, comps, self.contravariant, self.covariant)

    def __rmul__(self, scalar: float) -> "ExprField":
        c = Const(float(scalar))
        comps = self._map(lambda idx: self._rebuild(Binary("*", c, self.components[idx].root)))
        return ExprField(self.chart, comps, self.contravariant, self.covariant)


def jet(field: TensorField, point, order: int = 1, mode: DiffMode = DiffMode.DUAL) -> FieldJet:
    """Components and partial derivatives of ``field`` at ``point`` (or a batch)."""
    return field.jet(point, order, DiffMode(mode))


def require_compatible(*fields: TensorField) -> ChartSpec:
    chart = fields[0].chart
    for f in fields[1:]:
        if not chart.compatible(f.chart):
            raise ChartMismatchError(
                f"charts {chart.coordinate_names} and {f.chart.coordinate_names} have different dimensions"
            )
    return chart


def stack_points(points: Sequence) -> np.ndarray:
    return np.stack([np.asarray(p, dtype=np.float64) for p in points])
