"""Elastic interaction coefficients: build the interaction matrix from a full
simulated sequence and solve for the loads to apply at each step.

The interaction matrix maps initial (applied) loads to final loads, both in
tightening order, and is unit upper triangular: a bolt is only affected by
bolts tightened after it.
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bench import BenchModel, LoadHistory, run_sequence, simulate
from .metrics import yield_check
from .model import (
    AssemblyPlan,
    ComputationError,
    JointSpec,
    LoadVector,
    ValidationError,
    validate_spec,
)
from .pattern import TighteningPattern


class InfeasibleTargetError(ComputationError):
    def __init__(self, position: int, value: float):
        self.position = position
        self.value = value
        super().__init__(
            f"infeasible target: bolt {position} would need initial load {value:.6g} kN <= 0"
        )


class ConvergenceError(ComputationError):
    def __init__(self, residuals):
        self.residuals = tuple(residuals)
        trail = ", ".join(f"{r:.3g}" for r in self.residuals)
        super().__init__(
            f"did not converge after {len(self.residuals)} iterations; "
            f"max relative deviation per iteration: [{trail}]"
        )


@dataclass(frozen=True, eq=False)
class InteractionMatrix:
    """Unit upper triangular matrix indexed by tightening order.

    ``order[k]`` is the bolt position of row/column ``k``.
    """

    a: np.ndarray
    order: tuple[int, ...]

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        n = len(self.order)
        if a.shape != (n, n):
            raise ValidationError(f"matrix shape {a.shape} does not match order length {n}")
        if not np.all(np.diag(a) == 1.0):
            raise ValidationError("matrix diagonal must be all ones")
        if np.any(np.tril(a, -1) != 0):
            raise ValidationError("matrix must be upper triangular")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "order", tuple(int(p) for p in self.order))

    @property
    def n(self) -> int:
        return len(self.order)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bolt"] + list(self.order))
            for p, row in zip(self.order, self.a):
                w.writerow([p] + [repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> InteractionMatrix:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][0].strip() != "bolt":
            raise ValidationError(f"{Path(path).name}: header row must start with 'bolt'")
        order = [int(v) for v in rows[0][1:]]
        if [int(r[0]) for r in rows[1:]] != order:
            raise ValidationError(f"{Path(path).name}: row labels differ from header order")
        return cls(np.array([[float(v) for v in r[1:]] for r in rows[1:]]), order)


def build_sh(
    spec: JointSpec,
    model: BenchModel,
    pattern: TighteningPattern,
    probe_load: float | None = None,
) -> LoadHistory:
    """Simulate the pattern with every bolt tightened to ``probe_load``.

    ``probe_load`` defaults to the target load.
    """
    probe = spec.target_load if probe_load is None else probe_load
    if not probe > 0:
        raise ValidationError(f"probe_load must be positive, got {probe}")
    history, _ = run_sequence(spec, model, pattern, LoadVector.uniform(spec.n_bolts, probe))
    return history


def compute_A(sh: LoadHistory) -> InteractionMatrix:
    """Interaction matrix from a load history.

    Entry ``(i, j)`` above the diagonal is the change in bolt ``i``'s load
    caused by step ``j``, divided by the load applied at step ``j``.
    """
    s = sh.sh
    diag = np.diag(s)
    zero = np.flatnonzero(diag == 0)
    if zero.size:
        k = int(zero[0])
        raise ComputationError(
            f"load history has zero applied load at step {k + 1} (bolt {sh.order[k]})"
        )
    n = sh.n
    a = np.eye(n)
    change = np.diff(s, axis=0)  # change[j-1, i] = s[j, i] - s[j-1, i]
    for j in range(1, n):
        a[:j, j] = change[j - 1, :j] / s[j, j]
    return InteractionMatrix(a, sh.order)


def back_substitute(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``a @ x = b`` for unit upper triangular ``a``."""
    n = len(b)
    x = np.zeros(n)
    for k in range(n - 1, -1, -1):
        x[k] = b[k] - a[k, k + 1:] @ x[k + 1:]
    return x


def solve_initial_loads(A: InteractionMatrix, target: LoadVector) -> LoadVector:
    """Initial loads that make the final loads equal ``target``.

    ``target`` is indexed by bolt position; the result is too.
    """
    n = A.n
    if len(target) != n:
        raise ValidationError(f"target has {len(target)} entries, matrix is {n}x{n}")
    sf = target.in_order(A.order)
    si = back_substitute(A.a, sf)
    residual = np.max(np.abs(A.a @ si - sf))
    scale = np.max(np.abs(sf)) if n else 0.0
    if not residual <= 1e-9 * scale:
        raise ComputationError(f"back-substitution residual {residual:.3g} too large")
    for k in range(n):
        if not si[k] > 0:
            raise InfeasibleTargetError(A.order[k], float(si[k]))
    return LoadVector.from_order(n, A.order, si)


def _plan(spec, model, pattern, initial, method, iterations=1, residuals=()):
    _, _, state = simulate(spec, model, pattern, initial)
    plan = AssemblyPlan(
        pattern=pattern,
        initial_loads=initial,
        predicted_final_loads=state.true_loads(),
        method=method,
        iterations=iterations,
        residuals=tuple(residuals),
    )
    return dataclasses.replace(plan, warnings=tuple(yield_check(plan, spec)))


def run_eicm(
    spec: JointSpec,
    model: BenchModel,
    pattern: TighteningPattern,
    probe_load: float | None = None,
) -> AssemblyPlan:
    """One-pass plan from a single probe sequence on the bench."""
    validate_spec(spec)
    A = compute_A(build_sh(spec, model, pattern, probe_load))
    initial = solve_initial_loads(A, LoadVector.uniform(spec.n_bolts, spec.target_load))
    return _plan(spec, model, pattern, initial, "eicm")


def _max_rel_dev(final: LoadVector, target: float) -> float:
    return float(np.max(np.abs(final.loads - target)) / target)


def iterative_eicm(
    spec: JointSpec,
    model: BenchModel,
    pattern: TighteningPattern,
    tol: float = 1e-3,
    max_iter: int = 20,
) -> AssemblyPlan:
    """Re-derive the matrix at the current candidate loads until the
    simulated final loads are within ``tol`` (relative) of target.

    The first history is taken with every bolt at the target load. Each
    iteration solves for new initial loads, simulates them, and reuses that
    simulation's history for the next matrix. A linear bench stops after one
    iteration.
    """
    validate_spec(spec)
    if not tol > 0:
        raise ValidationError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ValidationError(f"max_iter must be >= 1, got {max_iter}")
    target = LoadVector.uniform(spec.n_bolts, spec.target_load)
    history = build_sh(spec, model, pattern)
    residuals = []
    for it in range(1, max_iter + 1):
        initial = solve_initial_loads(compute_A(history), target)
        history, _, state = simulate(spec, model, pattern, initial)
        residuals.append(_max_rel_dev(state.true_loads(), spec.target_load))
        if residuals[-1] <= tol:
            return _plan(spec, model, pattern, initial, "eicm-iterative", it, residuals)
    raise ConvergenceError(residuals)
