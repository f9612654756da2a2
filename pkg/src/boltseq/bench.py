"""Virtual test bench: sequential tightening with elastic interaction.

Tightening a bolt sets it to the applied load and shifts every previously
tightened bolt nearby by ``c * load``. The coefficient ``c`` comes from one of
three models:

``tetraparametric``
    Four ratios chosen by ring distance (1 or 2) and by whether the
    neighbouring bolt on the far/intermediate side is already tight.
``kernel``
    One ratio per ring distance ``d <= R``, regardless of neighbours.
``influence``
    An explicit ``n x n`` table ``c[affected, tightened]`` by position. It is
    not rotation invariant and exists to replay arbitrary measured data.

A synthetic nonlinearity scales each change by
``(affected current load / reference_load) ** q``. Measurement noise only
perturbs what `BenchState.read` reports, never the stored loads.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .model import (
    ComputationError,
    JointSpec,
    LoadVector,
    TamCoefficients,
    ValidationError,
    require_tam_size,
)
from .pattern import TighteningPattern, ring_distance, ring_offset

VARIANTS = ("tetraparametric", "kernel", "influence")
DEFAULT_NOISE_REL_STD = 0.01


def classify_neighbour(
    n: int, tightened: int, affected: int, is_tight: Callable[[int], bool]
) -> str | None:
    """Name the interaction case for ``affected`` when ``tightened`` is tightened.

    Returns ``"alpha"``, ``"beta"``, ``"gamma"``, ``"delta"`` or ``None``
    beyond ring distance 2. ``is_tight`` reports whether a position was already
    tightened. Requires ``n >= 5`` so the two sides of the ring never overlap.
    """
    d = ring_distance(n, tightened, affected)
    if d not in (1, 2):
        return None
    side = 1 if ring_offset(n, tightened, d) == affected else -1
    if d == 1:
        beyond = ring_offset(n, tightened, 2 * side)
        return "beta" if is_tight(beyond) else "alpha"
    between = ring_offset(n, tightened, side)
    return "delta" if is_tight(between) else "gamma"


@dataclass(frozen=True, eq=False)
class BenchModel:
    """Interaction model of the bench; build with the classmethods."""

    variant: str
    coeffs: TamCoefficients | None = None
    losses: tuple[float, ...] | None = None
    influence: np.ndarray | None = None
    nonlinearity_exponent: float = 0.0
    reference_load: float | None = None
    noise_rel_std: float = 0.0
    noise_seed: int = 0

    def __post_init__(self):
        errors = []
        if self.variant not in VARIANTS:
            errors.append(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        elif self.variant == "tetraparametric" and self.coeffs is None:
            errors.append("coeffs required for tetraparametric variant")
        elif self.variant == "kernel":
            if not self.losses:
                errors.append("losses must hold at least one coefficient")
            else:
                object.__setattr__(self, "losses", tuple(float(k) for k in self.losses))
        elif self.variant == "influence":
            if self.influence is None:
                errors.append("influence matrix required for influence variant")
            else:
                c = np.array(self.influence, dtype=float)
                if c.ndim != 2 or c.shape[0] != c.shape[1]:
                    errors.append("influence must be a square matrix")
                c.setflags(write=False)
                object.__setattr__(self, "influence", c)
        if not self.nonlinearity_exponent >= 0:
            errors.append("nonlinearity_exponent must be >= 0")
        if self.nonlinearity_exponent > 0 and not (
            self.reference_load is not None and self.reference_load > 0
        ):
            errors.append("reference_load must be positive when nonlinearity_exponent > 0")
        if not self.noise_rel_std >= 0:
            errors.append("noise_rel_std must be >= 0")
        if errors:
            raise ValidationError(errors)

    @classmethod
    def tetraparametric(cls, coeffs: TamCoefficients, **kw) -> BenchModel:
        return cls("tetraparametric", coeffs=coeffs, **kw)

    @classmethod
    def kernel(cls, losses: Sequence[float], **kw) -> BenchModel:
        return cls("kernel", losses=tuple(losses), **kw)

    @classmethod
    def from_influence(cls, matrix, **kw) -> BenchModel:
        return cls("influence", influence=matrix, **kw)

    @property
    def is_linear(self) -> bool:
        return self.nonlinearity_exponent == 0

    def check(self, n: int) -> None:
        """Raise if the model cannot be used on a ring of ``n`` bolts."""
        if self.variant == "tetraparametric":
            require_tam_size(n)
        elif self.variant == "kernel" and len(self.losses) > n // 2:
            raise ValidationError(
                f"kernel range {len(self.losses)} exceeds floor(n/2)={n // 2}"
            )
        elif self.variant == "influence" and self.influence.shape != (n, n):
            raise ValidationError(
                f"influence matrix is {self.influence.shape}, expected ({n}, {n})"
            )

    def coefficient(self, n: int, tightened: int, affected: int, is_tight) -> float:
        if self.variant == "tetraparametric":
            case = classify_neighbour(n, tightened, affected, is_tight)
            return 0.0 if case is None else getattr(self.coeffs, case)
        if self.variant == "kernel":
            d = ring_distance(n, tightened, affected)
            return self.losses[d - 1] if d <= len(self.losses) else 0.0
        return float(self.influence[affected - 1, tightened - 1])


@dataclass(frozen=True)
class HistoryEntry:
    step: int
    position: int
    load: float
    deltas: dict[int, float]


@dataclass
class BenchState:
    """Mutable bench for one tightening session; not shared between threads."""

    spec: JointSpec
    model: BenchModel
    loads: np.ndarray = field(init=False)
    tight: np.ndarray = field(init=False)
    history: list[HistoryEntry] = field(init=False, default_factory=list)

    def __post_init__(self):
        n = self.spec.n_bolts
        self.model.check(n)
        self.loads = np.zeros(n)
        self.tight = np.zeros(n, dtype=bool)

    @property
    def n(self) -> int:
        return self.spec.n_bolts

    @property
    def step(self) -> int:
        return len(self.history)

    def _is_tight(self, position: int) -> bool:
        return bool(self.tight[position - 1])

    def tighten(self, position: int, load: float) -> BenchState:
        """Bring ``position`` to ``load`` and apply interaction to tight bolts."""
        n = self.n
        if not 1 <= position <= n:
            raise ValidationError(f"position {position} outside 1..{n}")
        if not (math.isfinite(load) and load > 0):
            raise ValidationError(f"load must be positive (bolt {position}, got {load})")
        m = self.model
        deltas = {}
        for other in np.flatnonzero(self.tight) + 1:
            other = int(other)
            if other == position:
                continue
            c = m.coefficient(n, position, other, self._is_tight)
            if c == 0:
                continue
            delta = c * load
            if not m.is_linear:
                current = max(self.loads[other - 1], 0.0)
                delta *= (current / m.reference_load) ** m.nonlinearity_exponent
            deltas[other] = delta
        self.loads[position - 1] = load
        self.tight[position - 1] = True
        for other, delta in deltas.items():
            self.loads[other - 1] += delta
        self.history.append(HistoryEntry(self.step + 1, position, float(load), deltas))
        return self

    def _noise_factor(self, position: int) -> float:
        m = self.model
        if m.noise_rel_std == 0:
            return 1.0
        rng = np.random.default_rng([m.noise_seed, self.step, position])
        return 1.0 + m.noise_rel_std * rng.standard_normal()

    def read(self, position: int) -> float:
        """Measured load of ``position`` at the current step."""
        if not 1 <= position <= self.n:
            raise ValidationError(f"position {position} outside 1..{self.n}")
        return float(self.loads[position - 1]) * self._noise_factor(position)

    def reported(self) -> LoadVector:
        values = [self.read(p) if self.tight[p - 1] else 0.0 for p in range(1, self.n + 1)]
        return LoadVector(values, self.tight.copy())

    def true_loads(self) -> LoadVector:
        return LoadVector(self.loads.copy(), self.tight.copy())


@dataclass(frozen=True, eq=False)
class LoadHistory:
    """Load of every bolt after every tightening step.

    ``sh[k, j]`` is the load of the ``j``-th tightened bolt right after step
    ``k`` (both 0-based here); ``order`` gives the bolt positions of the
    columns.
    """

    sh: np.ndarray
    order: tuple[int, ...]

    def __post_init__(self):
        sh = np.array(self.sh, dtype=float)
        if sh.ndim != 2 or sh.shape[0] != sh.shape[1] or sh.shape[0] != len(self.order):
            raise ValidationError("sh must be square with one column per ordered bolt")
        sh.setflags(write=False)
        object.__setattr__(self, "sh", sh)
        object.__setattr__(self, "order", tuple(int(p) for p in self.order))

    @property
    def n(self) -> int:
        return len(self.order)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step"] + list(self.order))
            for k, row in enumerate(self.sh, start=1):
                w.writerow([k] + [repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> LoadHistory:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][0].strip() != "step":
            raise ValidationError(f"{Path(path).name}: header row must start with 'step'")
        order = [int(v) for v in rows[0][1:]]
        return cls(np.array([[float(v) for v in r[1:]] for r in rows[1:]]), order)


def run_sequence(
    spec: JointSpec,
    model: BenchModel,
    pattern: TighteningPattern,
    initial_loads: LoadVector,
) -> tuple[LoadHistory, LoadVector]:
    """Tighten ``pattern`` on a fresh bench and record measured loads each step."""
    history, final, _ = simulate(spec, model, pattern, initial_loads)
    return history, final


def simulate(spec, model, pattern, initial_loads):
    """Like `run_sequence` but also returns the final `BenchState`."""
    n = spec.n_bolts
    if pattern.n_bolts != n:
        raise ValidationError(f"pattern has {pattern.n_bolts} bolts, joint has {n}")
    if len(initial_loads) != n:
        raise ValidationError(f"initial_loads has {len(initial_loads)} entries, joint has {n}")
    bad = [p for p in pattern.order if not initial_loads[p] > 0]
    if bad:
        raise ValidationError(f"initial_loads must be positive for bolts {bad}")
    state = BenchState(spec, model)
    order = np.asarray(pattern.order)
    sh = np.zeros((n, n))
    for k, p in enumerate(pattern.order):
        state.tighten(p, initial_loads[p])
        sh[k, : k + 1] = [state.read(int(q)) for q in order[: k + 1]]
    if not np.all(np.isfinite(sh)):
        raise ComputationError("bench produced non-finite loads")
    return LoadHistory(sh, pattern.order), state.reported(), state
