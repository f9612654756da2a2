"""TOML run configuration.

Layout::

    pattern = "pattern1"          # or an explicit list of positions
    method = "both"               # eicm | tam | both
    probe_load = 200.0            # optional, joint unit

    [joint]
    n_bolts = 20
    target_load = 200.0
    unit = "kN"                   # or "N"; converted to kN on read
    yield_load = 500.0            # optional
    warn_fraction = 0.9
    scenario_label = "mu=0.2"

    [bench]
    variant = "tetraparametric"   # or "kernel" / "influence"
    alpha = -0.147
    beta = -0.147
    gamma = -0.018
    delta = 0.002
    # losses = [-0.15, -0.02, -0.005]   kernel
    # influence = [[...], ...]          influence, rows = affected bolt
    nonlinearity_exponent = 0.0
    reference_load = 200.0
    noise = false                 # true -> 1 % relative std
    noise_rel_std = 0.0
    noise_seed = 0
    protocol_level = 200.0        # optional, defaults to target_load

    [iterative]
    enabled = false
    tol = 1e-3
    max_iter = 20

    [output]
    directory = "out"
    format = "csv"                # csv -> text report, json -> JSON report

    [sweep]
    patterns = ["pattern1", "pattern2"]
    coefficients = [{label = "mu=0.2", alpha = -0.147, beta = -0.147, gamma = -0.018, delta = 0.002}]
    workers = 1
"""

from __future__ import annotations

import difflib
import re
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .bench import DEFAULT_NOISE_REL_STD, VARIANTS, BenchModel
from .model import JointSpec, TamCoefficients, ValidationError, to_kn, validate_spec
from .pattern import PATTERN_KINDS, TighteningPattern, make_pattern

METHODS = ("eicm", "tam", "both")
FORMATS = ("csv", "json")

_KEYS = {
    None: {"joint", "bench", "pattern", "method", "probe_load", "iterative",
           "output", "sweep", "initial_loads"},
    "joint": {"n_bolts", "target_load", "unit", "yield_load", "warn_fraction",
              "scenario_label"},
    "bench": {"variant", "alpha", "beta", "gamma", "delta", "losses", "influence",
              "nonlinearity_exponent", "reference_load", "noise", "noise_rel_std",
              "noise_seed", "protocol_level"},
    "iterative": {"enabled", "tol", "max_iter"},
    "output": {"directory", "format"},
    "sweep": {"patterns", "coefficients", "workers"},
}
_REQUIRED = {"joint": {"n_bolts", "target_load"}, "bench": {"variant"}}
_COEFF_KEYS = {"alpha", "beta", "gamma", "delta", "label"}


class ConfigError(ValidationError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    patterns: tuple[str | tuple[int, ...], ...]
    coefficients: tuple[tuple[str, TamCoefficients], ...]
    workers: int = 1


@dataclass(frozen=True)
class RunConfig:
    joint: JointSpec
    bench: BenchModel
    pattern: TighteningPattern
    pattern_name: str
    method: str = "eicm"
    probe_load: float | None = None
    protocol_level: float | None = None
    iterative: bool = False
    tol: float = 1e-3
    max_iter: int = 20
    output_dir: Path = Path("out")
    output_format: str = "csv"
    initial_loads: Path | None = None
    sweep: SweepSpec | None = None

    def echo(self) -> dict[str, Any]:
        """Fully resolved settings (forces in kN) for reports."""
        b = self.bench
        bench: dict[str, Any] = {"variant": b.variant}
        if b.coeffs is not None:
            bench.update(zip(("alpha", "beta", "gamma", "delta"), b.coeffs.as_tuple()))
        if b.losses is not None:
            bench["losses"] = list(b.losses)
        if b.influence is not None:
            bench["influence"] = b.influence.tolist()
        bench.update(
            nonlinearity_exponent=b.nonlinearity_exponent,
            reference_load_kn=b.reference_load,
            noise_rel_std=b.noise_rel_std,
            noise_seed=b.noise_seed,
            protocol_level_kn=self.protocol_level,
        )
        joint = asdict(self.joint)
        joint["target_load_kn"] = joint.pop("target_load")
        joint["yield_load_kn"] = joint.pop("yield_load")
        return {
            "joint": joint,
            "bench": bench,
            "pattern": self.pattern_name,
            "order": list(self.pattern.order),
            "method": self.method,
            "probe_load_kn": self.probe_load,
            "iterative": {"enabled": self.iterative, "tol": self.tol,
                          "max_iter": self.max_iter},
            "output": {"directory": str(self.output_dir), "format": self.output_format},
        }


def _line_of(text: str, key: str) -> int | None:
    pat = re.compile(rf"^\s*\"?{re.escape(key)}\"?\s*=|^\s*\[{re.escape(key)}\]")
    for i, line in enumerate(text.splitlines(), start=1):
        if pat.search(line):
            return i
    return None


class _Reader:
    def __init__(self, text: str, name: str):
        self.text = text
        self.name = name
        self.errors: list[str] = []

    def where(self, key: str) -> str:
        line = _line_of(self.text, key)
        return f"{self.name}:{line}" if line else self.name

    def check_keys(self, table: dict, section: str | None) -> None:
        allowed = _KEYS[section]
        label = f"[{section}]" if section else "top level"
        for key in table:
            if key not in allowed:
                hint = difflib.get_close_matches(key, sorted(allowed), n=1)
                tip = f"; did you mean {hint[0]!r}?" if hint else ""
                self.errors.append(f"{self.where(key)}: unknown key {key!r} in {label}{tip}")
        for key in sorted(_REQUIRED.get(section, set()) - set(table)):
            self.errors.append(f"{self.name}: missing key {key!r} in {label}")

    def get(self, table, key, kind, default=None, section=None):
        if key not in table:
            return default
        value = table[key]
        ok = isinstance(value, kind) and not (kind is not bool and isinstance(value, bool))
        if not ok:
            label = f"{section}.{key}" if section else key
            names = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
            self.errors.append(f"{self.where(key)}: {label} must be {names}, got {value!r}")
            return default
        return value


def _pattern(value, n, where) -> tuple[TighteningPattern, str]:
    if isinstance(value, str):
        if value == "custom":
            raise ConfigError(f"{where}: custom pattern needs an explicit position list")
        return make_pattern(value, n), value
    if isinstance(value, list) and all(isinstance(p, int) for p in value):
        return make_pattern("custom", n, value), "custom"
    raise ConfigError(f"{where}: pattern must be one of {PATTERN_KINDS[:-1]} or a list of positions")


def parse_config(path) -> RunConfig:
    """Read and validate a TOML run configuration; forces are converted to kN."""
    path = Path(path)
    text = path.read_text()
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path.name}: {exc}") from None
    return config_from_dict(data, text=text, name=path.name, base=path.parent)


def config_from_dict(data: dict, text: str = "", name: str = "<config>", base=Path(".")) -> RunConfig:
    r = _Reader(text, name)
    r.check_keys(data, None)
    for section in ("joint", "bench", "iterative", "output", "sweep"):
        if section in data:
            if not isinstance(data[section], dict):
                r.errors.append(f"{r.where(section)}: [{section}] must be a table")
                data = {**data, section: {}}
            else:
                r.check_keys(data[section], section)
        elif section in _REQUIRED:
            r.errors.append(f"{name}: missing table [{section}]")
    if r.errors:
        raise ConfigError(r.errors)

    num = (int, float)
    j = data["joint"]
    unit = r.get(j, "unit", str, "kN", "joint")

    def force(table, key, section, default=None):
        v = r.get(table, key, num, default, section)
        if v is None:
            return None
        try:
            return to_kn(v, unit)
        except ValidationError as exc:
            r.errors.append(f"{r.where('unit')}: {exc}")
            return None

    spec_kw = dict(
        n_bolts=r.get(j, "n_bolts", int, None, "joint"),
        target_load=force(j, "target_load", "joint"),
        yield_load=force(j, "yield_load", "joint"),
        warn_fraction=float(r.get(j, "warn_fraction", num, 0.9, "joint")),
        scenario_label=r.get(j, "scenario_label", str, None, "joint"),
    )
    b = data["bench"]
    variant = r.get(b, "variant", str, None, "bench")
    noise = r.get(b, "noise", bool, False, "bench")
    bench_kw = dict(
        nonlinearity_exponent=float(r.get(b, "nonlinearity_exponent", num, 0.0, "bench")),
        reference_load=force(b, "reference_load", "bench"),
        noise_rel_std=float(r.get(b, "noise_rel_std", num,
                                  DEFAULT_NOISE_REL_STD if noise else 0.0, "bench")),
        noise_seed=r.get(b, "noise_seed", int, 0, "bench"),
    )
    protocol_level = force(b, "protocol_level", "bench")
    it = data.get("iterative", {})
    out = data.get("output", {})
    method = r.get(data, "method", str, "eicm")
    fmt = r.get(out, "format", str, "csv", "output")
    if method not in METHODS:
        r.errors.append(f"{r.where('method')}: method must be one of {METHODS}, got {method!r}")
    if fmt not in FORMATS:
        r.errors.append(f"{r.where('format')}: output.format must be one of {FORMATS}, got {fmt!r}")
    if variant is not None and variant not in VARIANTS:
        r.errors.append(f"{r.where('variant')}: bench.variant must be one of {VARIANTS}, got {variant!r}")
    if r.errors:
        raise ConfigError(r.errors)

    spec = validate_spec(JointSpec(**spec_kw))
    if variant == "tetraparametric":
        missing = [k for k in ("alpha", "beta", "gamma", "delta") if k not in b]
        if missing:
            raise ConfigError(f"{r.where('variant')}: tetraparametric bench needs {missing}")
        coeffs = TamCoefficients(*(float(r.get(b, k, num, None, "bench"))
                                   for k in ("alpha", "beta", "gamma", "delta")))
        bench = BenchModel.tetraparametric(coeffs, **bench_kw)
    elif variant == "kernel":
        losses = r.get(b, "losses", list, None, "bench")
        if not losses or not all(isinstance(v, num) for v in losses):
            raise ConfigError(f"{r.where('variant')}: kernel bench needs a numeric 'losses' list")
        bench = BenchModel.kernel(losses, **bench_kw)
    else:
        matrix = r.get(b, "influence", list, None, "bench")
        if matrix is None:
            raise ConfigError(f"{r.where('variant')}: influence bench needs an 'influence' matrix")
        bench = BenchModel.from_influence(matrix, **bench_kw)
    if r.errors:
        raise ConfigError(r.errors)
    bench.check(spec.n_bolts)

    if "pattern" not in data:
        raise ConfigError(f"{name}: missing key 'pattern'")
    pattern, pattern_name = _pattern(data["pattern"], spec.n_bolts, r.where("pattern"))

    sweep = None
    if "sweep" in data:
        s = data["sweep"]
        patterns = s.get("patterns", [data["pattern"]])
        if not isinstance(patterns, list):
            raise ConfigError(f"{r.where('patterns')}: sweep.patterns must be a list")
        for p in patterns:
            _pattern(p, spec.n_bolts, r.where("patterns"))
        sets = []
        for k, c in enumerate(s.get("coefficients", []), start=1):
            if not isinstance(c, dict) or set(c) - _COEFF_KEYS or not {"alpha", "beta", "gamma", "delta"} <= set(c):
                raise ConfigError(
                    f"{r.where('coefficients')}: sweep coefficient set {k} needs exactly "
                    f"alpha, beta, gamma, delta (and optional label)"
                )
            sets.append((str(c.get("label", f"set{k}")),
                         TamCoefficients(*(float(c[x]) for x in ("alpha", "beta", "gamma", "delta")))))
        if not sets:
            if bench.coeffs is None:
                raise ConfigError(f"{r.where('sweep')}: sweep needs coefficient sets for a non-tetraparametric bench")
            sets = [(spec.scenario_label or "bench", bench.coeffs)]
        sweep = SweepSpec(
            tuple(tuple(p) if isinstance(p, list) else p for p in patterns),
            tuple(sets),
            int(r.get(s, "workers", int, 1, "sweep")),
        )

    probe = r.get(data, "probe_load", num)
    initial = r.get(data, "initial_loads", str)
    cfg = RunConfig(
        joint=spec,
        bench=bench,
        pattern=pattern,
        pattern_name=pattern_name,
        method=method,
        probe_load=None if probe is None else to_kn(probe, unit),
        protocol_level=protocol_level,
        iterative=bool(r.get(it, "enabled", bool, False, "iterative")),
        tol=float(r.get(it, "tol", num, 1e-3, "iterative")),
        max_iter=int(r.get(it, "max_iter", int, 20, "iterative")),
        output_dir=Path(r.get(out, "directory", str, "out", "output")),
        output_format=fmt,
        initial_loads=None if initial is None else base / initial,
        sweep=sweep,
    )
    if r.errors:
        raise ConfigError(r.errors)
    if cfg.probe_load is not None and not cfg.probe_load > 0:
        raise ConfigError(f"{r.where('probe_load')}: probe_load must be positive")
    if not cfg.tol > 0 or cfg.max_iter < 1:
        raise ConfigError(f"{r.where('iterative')}: iterative.tol must be > 0 and max_iter >= 1")
    return cfg
