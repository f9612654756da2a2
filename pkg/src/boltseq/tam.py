"""Tetraparametric assembly: characterise a joint by four interaction ratios
measured in two load steps, then assemble the interaction matrix for any
pattern from position rules alone.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bench import BenchModel, BenchState, classify_neighbour
from .eicm import InteractionMatrix, _plan, solve_initial_loads
from .model import (
    AssemblyPlan,
    ComputationError,
    JointSpec,
    LoadVector,
    TamCoefficients,
    ValidationError,
    require_tam_size,
    validate_spec,
)
from .pattern import TighteningPattern, ring_offset

COEFFICIENTS = ("alpha", "beta", "gamma", "delta")
MIN_BOLTS_PROTOCOL = 12

# Layout used on the 20-bolt joint: eight bolts first, then three probes.
_FIRST_20 = (1, 4, 5, 8, 11, 15, 17, 18)
_SECOND_20 = (3, 9, 16)
_MAP_20 = (
    (3, 4, "beta"), (3, 1, "gamma"), (3, 5, "delta"),
    (9, 8, "alpha"), (9, 11, "gamma"),
    (16, 15, "alpha"), (16, 17, "beta"), (16, 18, "delta"),
)


@dataclass(frozen=True)
class TwoStepProtocol:
    """Which bolts to tighten in each step and what each reading estimates.

    ``measurement_plan`` maps each second-step bolt to the first-step bolts
    read before and after it is tightened. ``extraction_map`` entries are
    ``(tightened, measured, coefficient_name)``.
    """

    n_bolts: int
    level: float
    first_step: tuple[tuple[int, float], ...]
    second_step: tuple[int, ...]
    measurement_plan: dict[int, tuple[int, ...]]
    extraction_map: tuple[tuple[int, int, str], ...]

    @property
    def n_tightenings(self) -> int:
        return len(self.first_step) + len(self.second_step)

    @property
    def n_measurements(self) -> int:
        # baseline read of every first-step bolt, each affected bolt after its
        # probe, and each probe bolt itself
        affected = sum(len(v) for v in self.measurement_plan.values())
        return len(self.first_step) + affected + len(self.second_step)


def _zone(n, p):
    return {ring_offset(n, p, s) for s in range(-2, 3)}


def _check_protocol(protocol: TwoStepProtocol) -> None:
    n = protocol.n_bolts
    errors = []
    named = {name for _, _, name in protocol.extraction_map}
    missing = [c for c in COEFFICIENTS if c not in named]
    if missing:
        errors.append(f"extraction_map lacks {missing}")
    zones = [_zone(n, p) for p in protocol.second_step]
    for i in range(len(zones)):
        for j in range(i + 1, len(zones)):
            if zones[i] & zones[j]:
                errors.append(
                    f"influence zones of bolts {protocol.second_step[i]} and "
                    f"{protocol.second_step[j]} overlap"
                )
    first = {p for p, _ in protocol.first_step}
    for b, m, name in protocol.extraction_map:
        case = classify_neighbour(n, b, m, first.__contains__)
        if case != name:
            errors.append(f"reading ({b}->{m}) estimates {case}, not {name}")
    if errors:
        raise ValidationError(errors)


def design_protocol(n: int, level: float) -> TwoStepProtocol:
    """Two-step experiment that exposes all four interaction cases.

    For 20 bolts this is the published layout (11 tightenings, 19 readings).
    Other rings use two probes: bolt 3 with 1, 4 and 5 pre-tightened gives
    gamma, beta and delta; bolt 9 with 10 pre-tightened gives alpha.
    """
    if n < MIN_BOLTS_PROTOCOL:
        raise ValidationError(
            f"ring too small for disjoint influence zones (n={n} < {MIN_BOLTS_PROTOCOL})"
        )
    if not level > 0:
        raise ValidationError(f"level must be positive, got {level}")
    if n == 20:
        first, second, emap = _FIRST_20, _SECOND_20, _MAP_20
    else:
        first = (1, 4, 5, 10)
        second = (3, 9)
        emap = ((3, 1, "gamma"), (3, 4, "beta"), (3, 5, "delta"), (9, 10, "alpha"))
    plan = {b: tuple(m for bb, m, _ in emap if bb == b) for b in second}
    protocol = TwoStepProtocol(
        n_bolts=n,
        level=float(level),
        first_step=tuple((p, float(level)) for p in first),
        second_step=tuple(second),
        measurement_plan=plan,
        extraction_map=tuple(emap),
    )
    _check_protocol(protocol)
    return protocol


@dataclass(frozen=True)
class Reading:
    bolt: int
    step: int
    load: float


@dataclass(frozen=True)
class MeasurementLog:
    """Every planned reading plus the tightenings that preceded them."""

    readings: tuple[Reading, ...]
    tightenings: tuple[tuple[int, int, float], ...]  # (step, bolt, applied load)

    def last_before(self, bolt: int, step: int) -> Reading | None:
        found = None
        for r in self.readings:
            if r.bolt == bolt and r.step < step:
                found = r
        return found

    def at(self, bolt: int, step: int) -> Reading | None:
        for r in self.readings:
            if r.bolt == bolt and r.step == step:
                return r
        return None


def execute_protocol(
    spec: JointSpec, model: BenchModel, protocol: TwoStepProtocol
) -> MeasurementLog:
    """Run both load steps on a fresh bench and take the planned readings."""
    if protocol.n_bolts != spec.n_bolts:
        raise ValidationError(
            f"protocol is for {protocol.n_bolts} bolts, joint has {spec.n_bolts}"
        )
    _check_protocol(protocol)
    state = BenchState(spec, model)
    readings, tightenings = [], []
    for p, load in protocol.first_step:
        state.tighten(p, load)
        tightenings.append((state.step, p, load))
    for p, _ in protocol.first_step:
        readings.append(Reading(p, state.step, state.read(p)))
    for b in protocol.second_step:
        state.tighten(b, protocol.level)
        tightenings.append((state.step, b, protocol.level))
        readings.append(Reading(b, state.step, state.read(b)))
        for m in protocol.measurement_plan[b]:
            readings.append(Reading(m, state.step, state.read(m)))
    return MeasurementLog(tuple(readings), tuple(tightenings))


def extract_coefficients(log: MeasurementLog, protocol: TwoStepProtocol) -> TamCoefficients:
    """Average the ratio (load after - load before) / probe load per coefficient.

    The returned ``spread`` holds max - min of the estimates of each one.
    """
    step_of = {b: s for s, b, _ in log.tightenings if b in protocol.second_step}
    samples: dict[str, list[float]] = {c: [] for c in COEFFICIENTS}
    for b, m, name in protocol.extraction_map:
        if b not in step_of:
            raise ValidationError(f"log has no tightening of bolt {b}")
        step = step_of[b]
        fb = log.at(b, step)
        after = log.at(m, step)
        before = log.last_before(m, step)
        for what, r in (("probe", fb), ("after", after), ("before", before)):
            if r is None:
                raise ValidationError(
                    f"missing measurement: {what} reading for ({b}->{m}) at step {step}"
                )
        if fb.load == 0:
            raise ComputationError(f"zero applied load on bolt {b} at step {step}")
        samples[name].append((after.load - before.load) / fb.load)
    for name, vals in samples.items():
        if not vals:
            raise ValidationError(f"no estimate for {name}")
    means = {k: float(np.mean(v)) for k, v in samples.items()}
    spread = {k: float(max(v) - min(v)) for k, v in samples.items()}
    return TamCoefficients(**means, spread=spread)


def assemble_A(n: int, pattern: TighteningPattern, coeffs: TamCoefficients) -> InteractionMatrix:
    """Place the four ratios into the interaction matrix of ``pattern``.

    Row ``i`` (bolt tightened at step ``i``) gets a nonzero entry in column
    ``j > i`` only when the step-``j`` bolt lies within ring distance 2.
    """
    require_tam_size(n)
    if pattern.n_bolts != n:
        raise ValidationError(f"pattern has {pattern.n_bolts} bolts, expected {n}")
    order = pattern.order
    a = np.eye(n)
    for j in range(1, n):
        pj = order[j]
        earlier = set(order[:j])
        for i in range(j):
            case = classify_neighbour(n, pj, order[i], earlier.__contains__)
            if case is not None:
                a[i, j] = getattr(coeffs, case)
    return InteractionMatrix(a, order)


def run_tam(
    spec: JointSpec,
    model: BenchModel,
    pattern: TighteningPattern,
    level: float | None = None,
    coeffs: TamCoefficients | None = None,
) -> AssemblyPlan:
    """Plan from the two-step protocol (or from ``coeffs`` if supplied).

    The protocol load ``level`` defaults to the target load. The plan is
    re-simulated on ``model`` for predicted final loads.
    """
    validate_spec(spec)
    if coeffs is None:
        protocol = design_protocol(spec.n_bolts, spec.target_load if level is None else level)
        coeffs = extract_coefficients(execute_protocol(spec, model, protocol), protocol)
    A = assemble_A(spec.n_bolts, pattern, coeffs)
    initial = solve_initial_loads(A, LoadVector.uniform(spec.n_bolts, spec.target_load))
    return _plan(spec, model, pattern, initial, "tam")


def coefficients_to_csv(coeffs: TamCoefficients, path) -> None:
    spread = coeffs.spread or {}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(COEFFICIENTS) + [f"{c}_spread" for c in COEFFICIENTS if c in spread])
        w.writerow([repr(float(v)) for v in coeffs.as_tuple()]
                   + [repr(float(spread[c])) for c in COEFFICIENTS if c in spread])


def coefficients_from_csv(path) -> TamCoefficients:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if len(rows) != 1:
        raise ValidationError(f"{Path(path).name}: expected exactly one data row")
    row = rows[0]
    try:
        values = {c: float(row[c]) for c in COEFFICIENTS}
    except KeyError as exc:
        raise ValidationError(f"{Path(path).name}: missing column {exc.args[0]}") from None
    spread = {c: float(row[f"{c}_spread"]) for c in COEFFICIENTS if f"{c}_spread" in row}
    return TamCoefficients(**values, spread=spread or None)


__all__ = [
    "TamCoefficients", "TwoStepProtocol", "MeasurementLog", "Reading",
    "design_protocol", "execute_protocol", "extract_coefficients",
    "assemble_A", "run_tam", "coefficients_to_csv", "coefficients_from_csv",
]
