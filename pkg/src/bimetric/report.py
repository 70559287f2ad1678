"""Residual reports shared by the library checks and the CLI."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ResidualReport:
    """Outcome of one residual check over a set of sample points.

    ``tolerance`` is the threshold actually applied, so ``passed`` is exactly
    ``max_residual <= tolerance``.  For relative checks it equals
    ``base_tolerance * (1 + scale)`` where ``scale`` is the largest magnitude
    of any term entering the identity over all samples.
    """

    check_name: str
    metric_names: list[str]
    mode: str
    samples: int
    seed: int | None
    max_residual: float
    mean_residual: float
    tolerance: float
    passed: bool
    worst_point: list[float]
    base_tolerance: float
    scale: float = 0.0
    notes: str = field(default="")

    @classmethod
    def from_residuals(
        cls,
        check_name: str,
        metric_names,
        mode,
        residual: np.ndarray,
        points: np.ndarray,
        *,
        tolerance: float,
        base_tolerance: float,
        scale: float = 0.0,
        seed: int | None = None,
        notes: str = "",
    ) -> "ResidualReport":
        residual = np.atleast_1d(np.asarray(residual, dtype=np.float64))
        pts = np.atleast_2d(points)
        worst = int(np.argmax(residual))
        max_residual = float(residual[worst])
        return cls(
            check_name=check_name,
            metric_names=list(metric_names),
            mode=getattr(mode, "value", str(mode)),
            samples=int(residual.size),
            seed=seed,
            max_residual=max_residual,
            mean_residual=float(np.mean(residual)),
            tolerance=float(tolerance),
            passed=bool(max_residual <= tolerance),
            worst_point=[float(c) for c in pts[worst]],
            base_tolerance=float(base_tolerance),
            scale=float(scale),
            notes=notes,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema"] = SCHEMA_VERSION
        return d
