"""Load statistics and comparison helpers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import AssemblyPlan, JointSpec, LoadVector, ValidationError


@dataclass(frozen=True)
class LoadStats:
    """Mean, sample standard deviation (n-1), min and max, all in kN."""

    mean: float
    std: float
    min: float
    max: float

    @property
    def rel_std(self) -> float:
        return self.std / abs(self.mean) if self.mean else float("inf")


def _values(loads) -> np.ndarray:
    if isinstance(loads, LoadVector):
        return loads.loads[loads.tightened]
    return np.asarray(loads, dtype=float).ravel()


def load_stats(loads: LoadVector | np.ndarray) -> LoadStats:
    """Statistics over tightened bolts; a single bolt has std 0."""
    v = _values(loads)
    if v.size == 0:
        raise ValidationError("loads: no tightened bolts to summarise")
    std = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    mean = float(np.mean(v))
    # keep min <= mean <= max under rounding for constant vectors
    return LoadStats(min(max(mean, v.min()), v.max()), std, float(v.min()), float(v.max()))


def avg_relative_error(observed, reference) -> float:
    """Mean of ``|observed - reference| / |reference|`` over bolts."""
    obs, ref = _values(observed), _values(reference)
    if obs.shape != ref.shape:
        raise ValidationError(f"length mismatch: {obs.size} vs {ref.size}")
    if np.any(ref == 0):
        raise ValidationError("reference contains a zero entry")
    return float(np.mean(np.abs(obs - ref) / np.abs(ref)))


def matrix_max_abs_diff(a1, a2) -> float:
    """Largest entrywise absolute difference of two matrices."""
    m1 = np.asarray(getattr(a1, "a", a1), dtype=float)
    m2 = np.asarray(getattr(a2, "a", a2), dtype=float)
    if m1.shape != m2.shape:
        raise ValidationError(f"dimension mismatch: {m1.shape} vs {m2.shape}")
    return float(np.max(np.abs(m1 - m2))) if m1.size else 0.0


def yield_check(plan: AssemblyPlan, spec: JointSpec) -> list[str]:
    if spec.yield_load is None:
        return []
    limit = spec.warn_fraction * spec.yield_load
    return [
        f"bolt {p}: initial load {plan.initial_loads[p]:.1f} kN exceeds "
        f"{spec.warn_fraction:g} x yield ({limit:.1f} kN)"
        for p in plan.pattern.order
        if plan.initial_loads[p] > limit
    ]
