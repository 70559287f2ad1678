"""Dense tensor components, charts and points.

Index order convention (used everywhere in the package): contravariant slots
first, then covariant slots.  ``R.data[l, i, j, k]`` is R^l_ijk and
``G.data[a, b, c]`` is Gamma^a_bc.  Any array axes in front of the tensor
slots are batch axes, one entry per sample point; every operation here acts on
the trailing slots and carries the batch axes through unchanged.
"""

from __future__ import annotations

import keyword
import string
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .errors import ShapeError, TensorIndexError, VarianceError

MAX_RANK = 4
MAX_DIMENSION = 8

FUNCTION_NAMES = frozenset({"sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh"})
RESERVED_NAMES = FUNCTION_NAMES | {"pi"}


@dataclass(frozen=True)
class ChartSpec:
    """Coordinate chart: ordered coordinate names plus an optional domain guard.

    The guard is an expression over the coordinates; a point belongs to the
    chart's domain where it evaluates strictly positive (``"r"`` for r > 0,
    ``"sin(theta)"`` for 0 < theta < pi).
    """

    coordinate_names: tuple[str, ...]
    domain_guard: Any = None  # Expression | None; set after parsing against this chart

    def __post_init__(self):
        names = tuple(self.coordinate_names)
        object.__setattr__(self, "coordinate_names", names)
        if not 1 <= len(names) <= MAX_DIMENSION:
            raise ShapeError(f"chart dimension must be in 1..{MAX_DIMENSION}, got {len(names)}")
        if len(set(names)) != len(names):
            raise ShapeError(f"coordinate names must be unique: {names}")
        for name in names:
            if not name.isidentifier() or keyword.iskeyword(name) or name in RESERVED_NAMES:
                raise ShapeError(f"invalid coordinate name {name!r}")

    @property
    def dimension(self) -> int:
        return len(self.coordinate_names)

    def compatible(self, other: "ChartSpec") -> bool:
        """Charts are matched positionally: equal dimension is all that is required."""
        return self.dimension == other.dimension


def as_points(coords, dimension: int | None = None) -> np.ndarray:
    """Validate one point (shape ``(n,)``) or a batch (shape ``(..., n)``)."""
    pts = np.asarray(coords, dtype=np.float64)
    if pts.ndim == 0:
        raise ShapeError("a point needs at least one coordinate")
    if dimension is not None and pts.shape[-1] != dimension:
        raise ShapeError(f"point has {pts.shape[-1]} coordinates, chart has {dimension}")
    if not np.all(np.isfinite(pts)):
        raise ShapeError("point coordinates must be finite")
    return pts


@dataclass(frozen=True)
class TensorShape:
    contravariant: int
    covariant: int
    dimension: int

    def __post_init__(self):
        if self.contravariant < 0 or self.covariant < 0:
            raise ShapeError("ranks must be non-negative")
        if self.rank > MAX_RANK:
            raise ShapeError(f"total rank {self.rank} exceeds the supported maximum {MAX_RANK}")
        if not 1 <= self.dimension <= MAX_DIMENSION:
            raise ShapeError(f"dimension must be in 1..{MAX_DIMENSION}, got {self.dimension}")

    @property
    def rank(self) -> int:
        return self.contravariant + self.covariant

    @property
    def size(self) -> int:
        return self.dimension**self.rank


class TensorComponents:
    """Immutable dense components of a (p, q) tensor, optionally batched."""

    __slots__ = ("data", "shape")

    def __init__(self, data, contravariant: int = 0, covariant: int = 0, dimension: int | None = None):
        arr = np.array(data, dtype=np.float64)
        rank = contravariant + covariant
        if arr.ndim < rank:
            raise ShapeError(f"array of ndim {arr.ndim} cannot hold a rank-{rank} tensor")
        slots = arr.shape[arr.ndim - rank:]
        if rank:
            if len(set(slots)) != 1:
                raise ShapeError(f"tensor slots must all have the same length, got {slots}")
            if dimension is not None and slots[0] != dimension:
                raise ShapeError(f"slot length {slots[0]} does not match dimension {dimension}")
            dimension = slots[0]
        elif dimension is None:
            raise ShapeError("dimension is required for scalars")
        shape = TensorShape(contravariant, covariant, dimension)
        if not np.all(np.isfinite(arr)):
            raise ShapeError("tensor components must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "shape", shape)

    def __setattr__(self, name, value):
        raise AttributeError("TensorComponents is immutable")

    @property
    def contravariant(self) -> int:
        return self.shape.contravariant

    @property
    def covariant(self) -> int:
        return self.shape.covariant

    @property
    def dimension(self) -> int:
        return self.shape.dimension

    @property
    def rank(self) -> int:
        return self.shape.rank

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.data.shape[: self.data.ndim - self.rank]

    def __getitem__(self, index):
        return self.data[index]

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def _like(self, data) -> "TensorComponents":
        return TensorComponents(data, self.contravariant, self.covariant, self.dimension)

    def _check_same(self, other: "TensorComponents"):
        if (other.contravariant, other.covariant, other.dimension) != (
            self.contravariant,
            self.covariant,
            self.dimension,
        ):
            raise ShapeError(f"shape mismatch: {self.shape} vs {other.shape}")

    def __add__(self, other: "TensorComponents") -> "TensorComponents":
        self._check_same(other)
        return self._like(self.data + other.data)

    def __sub__(self, other: "TensorComponents") -> "TensorComponents":
        self._check_same(other)
        return self._like(self.data - other.data)

    def __neg__(self) -> "TensorComponents":
        return self._like(-self.data)

    def __mul__(self, scalar: float) -> "TensorComponents":
        return self._like(self.data * float(scalar))

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.data))) if self.data.size else 0.0

    def __repr__(self) -> str:
        return (
            f"TensorComponents(({self.contravariant},{self.covariant}), n={self.dimension}, "
            f"batch={self.batch_shape}, data={self.data!r})"
        )


def identity(dimension: int) -> TensorComponents:
    """Kronecker delta as a (1,1) tensor."""
    return TensorComponents(np.eye(dimension), 1, 1)


def zeros(shape: TensorShape) -> TensorComponents:
    return TensorComponents(
        np.zeros((shape.dimension,) * shape.rank), shape.contravariant, shape.covariant, shape.dimension
    )


def contract(t: TensorComponents, upper_slot: int, lower_slot: int) -> TensorComponents:
    """Sum over one contravariant and one covariant slot.

    ``upper_slot`` counts contravariant slots and ``lower_slot`` counts
    covariant slots, both from zero.
    """
    if not 0 <= upper_slot < t.contravariant:
        raise TensorIndexError(f"upper slot {upper_slot} out of range for {t.contravariant} contravariant slots")
    if not 0 <= lower_slot < t.covariant:
        raise TensorIndexError(f"lower slot {lower_slot} out of range for {t.covariant} covariant slots")
    nb = len(t.batch_shape)
    out = np.trace(t.data, axis1=nb + upper_slot, axis2=nb + t.contravariant + lower_slot)
    return TensorComponents(out, t.contravariant - 1, t.covariant - 1, t.dimension)


def _letters(k: int, skip: str = "") -> str:
    pool = [c for c in string.ascii_lowercase if c not in skip]
    return "".join(pool[:k])


def tensor_product(a: TensorComponents, b: TensorComponents) -> TensorComponents:
    if a.dimension != b.dimension:
        raise ShapeError(f"dimension mismatch: {a.dimension} vs {b.dimension}")
    p = a.contravariant + b.contravariant
    q = a.covariant + b.covariant
    TensorShape(p, q, a.dimension)  # rank check
    la = _letters(a.rank)
    lb = _letters(b.rank, skip=la)
    a_up, a_lo = la[: a.contravariant], la[a.contravariant:]
    b_up, b_lo = lb[: b.contravariant], lb[b.contravariant:]
    spec = f"...{la},...{lb}->...{a_up}{b_up}{a_lo}{b_lo}"
    return TensorComponents(np.einsum(spec, a.data, b.data), p, q, a.dimension)


def _pair_axes(t: TensorComponents, slot_a: int, slot_b: int) -> tuple[int, int]:
    for s in (slot_a, slot_b):
        if not 0 <= s < t.rank:
            raise TensorIndexError(f"slot {s} out of range for rank {t.rank}")
    if slot_a == slot_b:
        raise TensorIndexError("slots must differ")
    upper_a = slot_a < t.contravariant
    upper_b = slot_b < t.contravariant
    if upper_a != upper_b:
        raise VarianceError(f"slots {slot_a} and {slot_b} have different variance")
    nb = len(t.batch_shape)
    return nb + slot_a, nb + slot_b


def antisymmetrize_pair(t: TensorComponents, slot_a: int, slot_b: int) -> TensorComponents:
    """``T - swap(T)`` over two slots of equal variance (no 1/2 factor).

    Slots are absolute positions in the (contravariant..., covariant...) order.
    """
    ax_a, ax_b = _pair_axes(t, slot_a, slot_b)
    return t._like(t.data - np.swapaxes(t.data, ax_a, ax_b))


def symmetrize_pair(t: TensorComponents, slot_a: int, slot_b: int) -> TensorComponents:
    """``T + swap(T)`` over two slots of equal variance (no 1/2 factor)."""
    ax_a, ax_b = _pair_axes(t, slot_a, slot_b)
    return t._like(t.data + np.swapaxes(t.data, ax_a, ax_b))


def stack(items: Sequence[TensorComponents]) -> TensorComponents:
    """Stack single-point tensors into one batch along a new leading axis."""
    first = items[0]
    for it in items[1:]:
        first._check_same(it)
    return first._like(np.stack([it.data for it in items]))
