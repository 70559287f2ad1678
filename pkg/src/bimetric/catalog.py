"""Built-in metrics, seeded random metrics and the JSON manifest format.

Manifest format (``schema`` 1)::

    {
      "schema": 1,
      "name": "polar_flat",
      "dimension": 2,
      "coordinates": ["r", "theta"],
      "components": [["1", "0"], ["0", "r^2"]],
      "domain_guard": "r",
      "sample_region": [[0.5, 2.0], [0.0, 6.283185307179586]],
      "notes": "..."
    }

``components`` is the full symmetric matrix; the two triangles must parse to
identical trees.  ``domain_guard`` is optional; points are in the domain
where it evaluates strictly positive.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .connection import MetricField
from .diff import ExprField
from .errors import ManifestError, NotFoundError, ShapeError
from .expr import parse
from .rng import XorShift64Star
from .report import SCHEMA_VERSION
from .tensor import ChartSpec

RANDOM_EPSILON = 0.1
RANDOM_COORDINATES = ("x", "y", "z")
RANDOM_BOX = (-1.0, 1.0)


@dataclass(frozen=True)
class MetricManifest:
    name: str
    coordinates: tuple[str, ...]
    components: tuple[tuple[str, ...], ...]
    domain_guard: str | None = None
    sample_region: tuple[tuple[float, float], ...] | None = None
    notes: str = field(default="", compare=False)

    @property
    def dimension(self) -> int:
        return len(self.coordinates)

    def chart(self) -> ChartSpec:
        chart = ChartSpec(tuple(self.coordinates))
        if self.domain_guard:
            chart = ChartSpec(chart.coordinate_names, parse(self.domain_guard, chart))
        return chart

    def to_metric(self) -> MetricField:
        chart = self.chart()
        comps = [[parse(src, chart) for src in row] for row in self.components]
        return MetricField(chart, comps, name=self.name, sample_region=self.sample_region, notes=self.notes)

    def to_dict(self) -> dict:
        d = {
            "schema": SCHEMA_VERSION,
            "name": self.name,
            "dimension": self.dimension,
            "coordinates": list(self.coordinates),
            "components": [list(row) for row in self.components],
        }
        if self.domain_guard:
            d["domain_guard"] = self.domain_guard
        if self.sample_region is not None:
            d["sample_region"] = [list(r) for r in self.sample_region]
        if self.notes:
            d["notes"] = self.notes
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricManifest":
        if not isinstance(d, dict):
            raise ManifestError("manifest must be a JSON object")
        if d.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ManifestError(f"unsupported manifest schema {d.get('schema')!r}")
        try:
            name = str(d["name"])
            dim = int(d["dimension"])
            coords = tuple(str(c) for c in d["coordinates"])
            comps = tuple(tuple(str(c) for c in row) for row in d["components"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"manifest is missing or has a malformed field: {exc}") from exc
        if len(coords) != dim:
            raise ManifestError(f"dimension {dim} does not match {len(coords)} coordinates")
        if len(comps) != dim or any(len(row) != dim for row in comps):
            raise ManifestError(f"components must be a {dim}x{dim} matrix")
        region = d.get("sample_region")
        if region is not None:
            try:
                region = tuple((float(lo), float(hi)) for lo, hi in region)
            except (TypeError, ValueError) as exc:
                raise ManifestError(f"malformed sample_region: {exc}") from exc
            if len(region) != dim or any(not lo < hi for lo, hi in region):
                raise ManifestError("sample_region needs one [lo, hi] interval with lo < hi per coordinate")
        return cls(name, coords, comps, d.get("domain_guard") or None, region, str(d.get("notes", "")))

    @classmethod
    def from_json(cls, text: str) -> "MetricManifest":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"invalid JSON at byte offset {exc.pos}: {exc.msg}") from exc
        return cls.from_dict(data)


def load_manifest(path) -> MetricManifest:
    return MetricManifest.from_json(Path(path).read_text())


def _diag(name, coords, diag, guard=None, region=None, notes=""):
    n = len(coords)
    comps = tuple(tuple(diag[a] if a == b else "0" for b in range(n)) for a in range(n))
    return MetricManifest(name, tuple(coords), comps, guard, region, notes)


_TWO_PI = 2.0 * math.pi

_BUILTINS = {
    "euclidean2": _diag(
        "euclidean2", ("x", "y"), ("1", "1"), region=((-2.0, 2.0), (-2.0, 2.0)), notes="identity metric"
    ),
    "euclidean3": _diag(
        "euclidean3",
        ("x", "y", "z"),
        ("1", "1", "1"),
        region=((-2.0, 2.0),) * 3,
        notes="identity metric",
    ),
    "polar_flat": _diag(
        "polar_flat",
        ("r", "theta"),
        ("1", "r^2"),
        guard="r",
        region=((0.5, 2.0), (0.0, _TWO_PI)),
        notes="flat plane in polar coordinates",
    ),
    "sphere_unit": _diag(
        "sphere_unit",
        ("theta", "phi"),
        ("1", "sin(theta)^2"),
        guard="sin(theta)",
        region=((0.3, math.pi - 0.3), (0.0, _TWO_PI)),
        notes="unit 2-sphere, scalar curvature 2",
    ),
    "poincare_half": _diag(
        "poincare_half",
        ("x", "y"),
        ("1/y^2", "1/y^2"),
        guard="y",
        region=((-1.0, 1.0), (0.5, 2.0)),
        notes="hyperbolic half-plane, scalar curvature -2",
    ),
    "conformal": _diag(
        "conformal",
        ("x", "y"),
        ("exp(0.6*sin(x)*cos(y))", "exp(0.6*sin(x)*cos(y))"),
        region=((-1.5, 1.5), (-1.5, 1.5)),
        notes="exp(2 phi) times identity with phi = 0.3 sin(x) cos(y)",
    ),
}


def builtin_names() -> list[str]:
    return sorted(_BUILTINS)


def builtin(name: str) -> MetricManifest:
    try:
        return _BUILTINS[name]
    except KeyError:
        raise NotFoundError(f"no built-in metric named {name!r}; known: {', '.join(builtin_names())}") from None


def _monomials(dim: int, degree: int) -> list[tuple[int, ...]]:
    """Exponent tuples of total degree <= ``degree``, by degree then lexicographically descending."""
    out = []
    for total in range(degree + 1):
        for exps in itertools.product(range(total, -1, -1), repeat=dim):
            if sum(exps) == total:
                out.append(exps)
    return out


def _monomial_source(exps, names) -> str:
    parts = []
    for e, name in zip(exps, names):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def random_polynomial(rng: XorShift64Star, names, degree: int, scale: float) -> str:
    """Polynomial source with coefficients uniform in [-scale, scale]."""
    text = ""
    for exps in _monomials(len(names), degree):
        c = rng.uniform(-scale, scale)
        mono = _monomial_source(exps, names)
        body = repr(abs(c)) + ("*" + mono if mono else "")
        if not text:
            text = ("-" if c < 0 else "") + body
        else:
            text += (" - " if c < 0 else " + ") + body
    return text


def random_metric(dim: int, seed: int, roughness: int = 2) -> MetricManifest:
    """B^T B + 0.1 I with B a dim x dim matrix of random polynomials of degree <= roughness.

    Coefficients are uniform in [-0.5, 0.5] and drawn from xorshift64* seeded
    with ``seed``, row by row of B, monomials in :func:`_monomials` order.
    The smallest eigenvalue is at least 0.1 everywhere.
    """
    if dim not in (2, 3):
        raise ShapeError(f"random metrics are available in dimension 2 or 3, not {dim}")
    if not 0 <= roughness <= 3:
        raise ShapeError("roughness must be between 0 and 3")
    rng = XorShift64Star(seed)
    names = RANDOM_COORDINATES[:dim]
    b = [[random_polynomial(rng, names, roughness, 0.5) for _ in range(dim)] for _ in range(dim)]
    comps = []
    for a in range(dim):
        row = []
        for c in range(dim):
            lo, hi = min(a, c), max(a, c)
            terms = [f"({b[k][lo]})*({b[k][hi]})" for k in range(dim)]
            if lo == hi:
                terms.append(repr(RANDOM_EPSILON))
            row.append(" + ".join(terms))
        comps.append(tuple(row))
    return MetricManifest(
        name=f"random{dim}d_s{seed}_r{roughness}",
        coordinates=names,
        components=tuple(comps),
        sample_region=(RANDOM_BOX,) * dim,
        notes=f"B^T B + {RANDOM_EPSILON} I, seed {seed}, roughness {roughness}",
    )


def random_field(chart: ChartSpec, contravariant: int, covariant: int, rng: XorShift64Star, degree: int = 2) -> ExprField:
    """Tensor field whose components are random polynomials (coefficients in [-1, 1])."""
    n = chart.dimension
    rank = contravariant + covariant
    names = chart.coordinate_names
    comps = [random_polynomial(rng, names, degree, 1.0) for _ in range(n**rank)]
    if rank == 0:
        return ExprField(chart, comps[0], 0, 0)
    arr = np.array(comps, dtype=object).reshape((n,) * rank)
    return ExprField(chart, arr.tolist(), contravariant, covariant)


def resolve(spec: str) -> MetricManifest:
    """Manifest from a file path, a built-in name or ``random:DIM:SEED[:ROUGHNESS]``."""
    path = Path(spec)
    if path.is_file():
        return load_manifest(path)
    if spec.startswith("random:"):
        parts = spec.split(":")[1:]
        try:
            nums = [int(p) for p in parts]
        except ValueError:
            raise NotFoundError(f"malformed random metric spec {spec!r}") from None
        if len(nums) not in (2, 3):
            raise NotFoundError(f"malformed random metric spec {spec!r}; use random:DIM:SEED[:ROUGHNESS]")
        return random_metric(*nums)
    if spec in _BUILTINS:
        return _BUILTINS[spec]
    raise NotFoundError(f"{spec!r} is neither a manifest file nor a built-in metric")
