"""Named residual checks over sampled points, and the aggregate suite.

Every check reduces to a list of arrays ("terms") whose sum vanishes when the
identity holds.  The per-point residual is the largest component of that sum.
A check passes when the worst residual is at most ``tol * (1 + S)``, where S
is the largest term component seen over all samples; this keeps the test
meaningful for metrics with large components.  ``flatness`` is the exception:
it compares against the raw tolerance, as a flatness test should not get
looser because the background is strongly curved.

Sampling: one xorshift64* stream seeded with ``seed`` produces the sample
points first (point by point, coordinate by coordinate, uniform over the
intersection of the metrics' sample regions), then the probe fields.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import catalog
from .connection import compatibility_terms, cocycle_gamma_terms, pointwise_residual, theorem1_terms
from .curvature import cocycle_riemann_terms, flatness_terms, ricci_identity_terms, theorem2_terms
from .diff import DiffMode, require_compatible
from .errors import ConfigurationError
from .report import SCHEMA_VERSION, ResidualReport
from .rng import XorShift64Star

PROBE_FIELDS = 5
FD_TOLERANCE = 1e-4


@dataclass(frozen=True)
class CheckSpec:
    name: str
    metrics: int
    dual_tolerance: float
    rank: int  # rank of the residual tensor
    probe: tuple[int, int] | None  # variance of the random probe field, if any
    terms: Callable
    scaled: bool = True

    def tolerance(self, mode: DiffMode) -> float:
        return FD_TOLERANCE if DiffMode(mode) is DiffMode.FD else self.dual_tolerance


CHECKS = {
    c.name: c
    for c in (
        CheckSpec("theorem1", 2, 1e-8, 2, (1, 0), lambda ms, p, pts, mode: theorem1_terms(ms[0], ms[1], p, pts, mode)),
        CheckSpec("theorem2", 2, 1e-7, 4, None, lambda ms, p, pts, mode: theorem2_terms(ms[0], ms[1], pts, mode)),
        CheckSpec("cocycle-gamma", 3, 1e-9, 3, None, lambda ms, p, pts, mode: cocycle_gamma_terms(*ms, pts, mode)),
        CheckSpec("cocycle-riemann", 3, 1e-7, 4, None, lambda ms, p, pts, mode: cocycle_riemann_terms(*ms, pts, mode)),
        CheckSpec(
            "flatness", 2, 1e-7, 4, None, lambda ms, p, pts, mode: flatness_terms(ms[0], ms[1], pts, mode), scaled=False
        ),
        CheckSpec("ricci-identity", 1, 1e-7, 3, (0, 1), lambda ms, p, pts, mode: ricci_identity_terms(ms[0], p, pts, mode)),
        CheckSpec("compatibility", 1, 1e-10, 3, None, lambda ms, p, pts, mode: compatibility_terms(ms[0], pts, mode)),
    )
}


def check_names() -> list[str]:
    return list(CHECKS)


def get_check(name: str) -> CheckSpec:
    try:
        return CHECKS[name]
    except KeyError:
        raise ConfigurationError(f"unknown check {name!r}; known: {', '.join(CHECKS)}") from None


def sample_region(metrics) -> list[tuple[float, float]]:
    """Intersection of the declared sample regions."""
    chart = require_compatible(*metrics)
    box = [(-np.inf, np.inf)] * chart.dimension
    declared = False
    for m in metrics:
        if m.sample_region is None:
            continue
        declared = True
        box = [(max(lo, a), min(hi, b)) for (lo, hi), (a, b) in zip(box, m.sample_region)]
    if not declared:
        raise ConfigurationError("none of the metrics declares a sample_region")
    if any(not lo < hi for lo, hi in box):
        names = ", ".join(m.name or "<unnamed>" for m in metrics)
        raise ConfigurationError(f"sample regions of {names} do not intersect")
    return box


def sample_points(rng: XorShift64Star, box, samples: int) -> np.ndarray:
    if samples < 1:
        raise ConfigurationError("need at least one sample")
    return np.array([[rng.uniform(lo, hi) for lo, hi in box] for _ in range(samples)])


def run_check(
    name: str,
    metrics,
    samples: int = 50,
    seed: int = 0,
    tol: float | None = None,
    mode: DiffMode = DiffMode.DUAL,
    probes: int = PROBE_FIELDS,
) -> ResidualReport:
    spec = get_check(name)
    mode = DiffMode(mode)
    metrics = list(metrics)
    if len(metrics) != spec.metrics:
        raise ConfigurationError(f"{name} needs {spec.metrics} metric(s), got {len(metrics)}")
    rng = XorShift64Star(seed)
    pts = sample_points(rng, sample_region(metrics), samples)
    chart = metrics[0].chart

    if spec.probe is None:
        fields = [None]
    else:
        fields = [catalog.random_field(chart, *spec.probe, rng) for _ in range(probes)]
    residual = np.zeros(samples)
    scale = np.zeros(samples)
    for f in fields:
        r, s = pointwise_residual(spec.terms(metrics, f, pts, mode), spec.rank)
        residual = np.maximum(residual, r)
        scale = np.maximum(scale, s)

    base = spec.tolerance(mode) if tol is None else float(tol)
    big = float(np.max(scale))
    tolerance = base * (1.0 + big) if spec.scaled else base
    notes = f"{len(fields)} probe field(s)" if spec.probe else ""
    return ResidualReport.from_residuals(
        name,
        [m.name for m in metrics],
        mode,
        residual,
        pts,
        tolerance=tolerance,
        base_tolerance=base,
        scale=big,
        seed=seed,
        notes=notes,
    )


def _builtin_plan(dims) -> list[tuple[str, list[str]]]:
    plan = []
    if 2 in dims:
        plan += [
            ("theorem1", ["polar_flat", "sphere_unit"]),
            ("theorem1", ["sphere_unit", "poincare_half"]),
            ("theorem2", ["polar_flat", "sphere_unit"]),
            ("theorem2", ["poincare_half", "conformal"]),
            ("cocycle-gamma", ["polar_flat", "sphere_unit", "poincare_half"]),
            ("cocycle-riemann", ["polar_flat", "sphere_unit", "poincare_half"]),
            ("flatness", ["sphere_unit", "polar_flat"]),
            ("flatness", ["conformal", "euclidean2"]),
            ("ricci-identity", ["sphere_unit"]),
            ("ricci-identity", ["poincare_half"]),
            ("ricci-identity", ["conformal"]),
        ]
        plan += [("compatibility", [n]) for n in catalog.builtin_names() if catalog.builtin(n).dimension == 2]
    if 3 in dims:
        plan += [("compatibility", ["euclidean3"])]
    return plan


def run_suite(dims=(2, 3), seed: int = 0, mode: DiffMode = DiffMode.DUAL, samples: int = 20) -> dict:
    """Every check over the catalog builtins and seed-derived random metrics.

    Random metrics (roughness 2) take seeds drawn from a stream seeded with
    ``seed``; each check gets its own sampling seed from the same stream.
    """
    mode = DiffMode(mode)
    dims = sorted(set(int(d) for d in dims))
    for d in dims:
        if d not in (2, 3):
            raise ConfigurationError(f"the suite covers dimensions 2 and 3, not {d}")
    stream = XorShift64Star(seed)
    reports = []

    def run(name, metrics):
        reports.append(run_check(name, metrics, samples=samples, seed=stream.randint(1 << 31), mode=mode))

    for d in dims:
        m1, m2, m3 = (catalog.random_metric(d, stream.randint(1 << 31)).to_metric() for _ in range(3))
        run("theorem1", [m1, m2])
        run("theorem2", [m1, m2])
        run("cocycle-gamma", [m1, m2, m3])
        run("cocycle-riemann", [m1, m2, m3])
        run("flatness", [m1, m1.delta()])
        run("ricci-identity", [m1])
        run("compatibility", [m1])
    for name, metric_names in _builtin_plan(dims):
        run(name, [catalog.builtin(n).to_metric() for n in metric_names])

    failed = [r.check_name for r in reports if not r.passed]
    return {
        "schema": SCHEMA_VERSION,
        "seed": seed,
        "mode": mode.value,
        "dims": dims,
        "samples": samples,
        "passed": not failed,
        "total": len(reports),
        "failed": len(failed),
        "reports": [r.to_dict() for r in reports],
    }


def suite_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)
