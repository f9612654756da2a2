"""Shared domain types: joint description, load vectors, assembly plans.

Forces are carried in kN internally. Bolt positions are 1-based, numbered
around the ring; any 0-based array indexing stays inside this package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np

if TYPE_CHECKING:
    from .pattern import TighteningPattern

MIN_BOLTS = 2
MIN_BOLTS_TAM = 5

_UNIT_TO_KN = {"kn": 1.0, "n": 1e-3}


class ValidationError(ValueError):
    """Input violates a documented invariant.

    ``errors`` holds one message per violated invariant; each message names
    the offending field.
    """

    def __init__(self, errors: str | Sequence[str]):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ComputationError(RuntimeError):
    """A well-formed problem that has no acceptable numerical answer."""


def to_kn(value: float, unit: str = "kN") -> float:
    """Convert a force given in ``unit`` ("kN" or "N") to kN."""
    try:
        factor = _UNIT_TO_KN[unit.strip().lower()]
    except KeyError:
        raise ValidationError(f"unit must be 'kN' or 'N', got {unit!r}") from None
    return float(value) * factor


@dataclass(frozen=True)
class JointSpec:
    """A circular bolted joint and the load we want every bolt to end at.

    Parameters
    ----------
    n_bolts : int
        Number of bolts on the ring.
    target_load : float
        Desired uniform final load, kN.
    yield_load : float, optional
        Bolt proof/yield capacity, kN. Enables yield warnings.
    warn_fraction : float
        Initial loads above ``warn_fraction * yield_load`` are flagged.
    scenario_label : str, optional
        Freeform tag (e.g. ``"mu=0.2"``) carried into reports.
    """

    n_bolts: int
    target_load: float
    yield_load: float | None = None
    warn_fraction: float = 0.9
    scenario_label: str | None = None


def validate_spec(spec: JointSpec) -> JointSpec:
    """Return ``spec`` unchanged if it is valid, else raise `ValidationError`."""
    errors = []
    if not isinstance(spec.n_bolts, (int, np.integer)) or isinstance(spec.n_bolts, bool):
        errors.append("n_bolts must be an integer")
    elif spec.n_bolts < MIN_BOLTS:
        errors.append(f"n_bolts below minimum ({spec.n_bolts} < {MIN_BOLTS})")
    if not (math.isfinite(spec.target_load) and spec.target_load > 0):
        errors.append("target_load must be positive")
    if spec.yield_load is not None and not (
        math.isfinite(spec.yield_load) and spec.yield_load > 0
    ):
        errors.append("yield_load must be positive")
    if not (0 < spec.warn_fraction <= 1):
        errors.append("warn_fraction must lie in (0, 1]")
    if errors:
        raise ValidationError(errors)
    return spec


def require_tam_size(n_bolts: int) -> None:
    if n_bolts < MIN_BOLTS_TAM:
        raise ValidationError(
            f"n_bolts below TAM minimum ({n_bolts} < {MIN_BOLTS_TAM})"
        )


@dataclass(frozen=True)
class TamCoefficients:
    """The four neighbour-interaction ratios of a joint.

    ``alpha``/``beta`` apply to a neighbour at ring distance 1 (``beta`` when
    the bolt beyond it is already tight), ``gamma``/``delta`` to a bolt at
    distance 2 (``delta`` when the bolt in between is already tight).
    ``spread`` optionally records max-min of redundant estimates and takes no
    part in equality.
    """

    alpha: float
    beta: float
    gamma: float
    delta: float
    spread: Mapping[str, float] | None = field(default=None, compare=False)

    def __post_init__(self):
        bad = [k for k in ("alpha", "beta", "gamma", "delta")
               if not math.isfinite(getattr(self, k))]
        if bad:
            raise ValidationError([f"{k} must be finite" for k in bad])

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.alpha, self.beta, self.gamma, self.delta)

    @classmethod
    def zero(cls) -> TamCoefficients:
        return cls(0.0, 0.0, 0.0, 0.0)


# Values identified for the studied 24" RTJ (two-step protocol results).
TAM_MU02 = TamCoefficients(-0.147, -0.147, -0.018, 0.002)
TAM_MU03 = TamCoefficients(-0.139, -0.138, -0.019, -0.002)


def _frozen(a) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LoadVector:
    """Per-bolt loads (kN) indexed by ring position 1..n.

    Untightened bolts carry zero load.
    """

    loads: np.ndarray
    tightened: np.ndarray

    def __post_init__(self):
        loads = np.asarray(self.loads, dtype=float)
        tightened = np.asarray(self.tightened, dtype=bool)
        if loads.ndim != 1 or loads.shape != tightened.shape:
            raise ValidationError("loads and tightened must be 1-D of equal length")
        if np.any(loads[~tightened] != 0):
            raise ValidationError("loads must be zero for untightened bolts")
        object.__setattr__(self, "loads", _frozen(loads))
        object.__setattr__(self, "tightened", _frozen(tightened))

    @classmethod
    def from_loads(cls, loads: Iterable[float]) -> LoadVector:
        """Every entry is treated as a tightened bolt."""
        loads = np.asarray(list(loads), dtype=float)
        return cls(loads, np.ones(loads.shape, dtype=bool))

    @classmethod
    def uniform(cls, n: int, value: float) -> LoadVector:
        return cls.from_loads(np.full(n, float(value)))

    @classmethod
    def from_mapping(cls, n: int, loads: Mapping[int, float]) -> LoadVector:
        """Build from ``{position: load}``; missing positions are untightened."""
        arr = np.zeros(n)
        flags = np.zeros(n, dtype=bool)
        for pos, value in loads.items():
            if not 1 <= pos <= n:
                raise ValidationError(f"position {pos} outside 1..{n}")
            arr[pos - 1] = value
            flags[pos - 1] = True
        return cls(arr, flags)

    def __len__(self) -> int:
        return len(self.loads)

    def __getitem__(self, position: int) -> float:
        if not 1 <= position <= len(self.loads):
            raise IndexError(f"position {position} outside 1..{len(self.loads)}")
        return float(self.loads[position - 1])

    def __eq__(self, other):
        if not isinstance(other, LoadVector):
            return NotImplemented
        return (np.array_equal(self.loads, other.loads)
                and np.array_equal(self.tightened, other.tightened))

    __hash__ = None

    def in_order(self, order: Sequence[int]) -> np.ndarray:
        """Loads rearranged into the given position order."""
        return self.loads[np.asarray(order) - 1].copy()

    @classmethod
    def from_order(cls, n: int, order: Sequence[int], values) -> LoadVector:
        """Inverse of `in_order`: scatter order-indexed values back to positions."""
        arr = np.zeros(n)
        flags = np.zeros(n, dtype=bool)
        idx = np.asarray(order) - 1
        arr[idx] = values
        flags[idx] = True
        return cls(arr, flags)

    def as_dict(self) -> dict[int, float]:
        return {i + 1: float(v) for i, v in enumerate(self.loads) if self.tightened[i]}


@dataclass(frozen=True)
class AssemblyPlan:
    """Initial (tightening) loads for a pattern and the final loads they give.

    ``predicted_final_loads`` come from re-running the plan on the bench.
    """

    pattern: TighteningPattern
    initial_loads: LoadVector
    predicted_final_loads: LoadVector
    warnings: tuple[str, ...] = ()
    method: str = ""
    iterations: int = 1
    residuals: tuple[float, ...] = ()

    def __post_init__(self):
        missing = [p for p in self.pattern.order if not self.initial_loads[p] > 0]
        if missing:
            raise ValidationError(
                f"initial_loads must be positive for every pattern position "
                f"(bolts {missing})"
            )
