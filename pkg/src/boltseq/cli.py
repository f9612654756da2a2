"""Command-line front end.

    boltseq COMMAND CONFIG [--out DIR] [--loads FILE]

Commands: coefficients, matrix, optimize, simulate, validate, sweep.
Exit status is 0 on success, 1 for invalid input, 2 when the computation
itself fails (infeasible target, no convergence).
"""

from __future__ import annotations

import csv
import dataclasses
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

import click
import numpy as np

from .bench import run_sequence
from .config import RunConfig, parse_config
from .eicm import build_sh, compute_A, iterative_eicm, run_eicm
from .metrics import avg_relative_error, load_stats
from .model import AssemblyPlan, ComputationError, LoadVector, ValidationError
from .pattern import TighteningPattern, make_pattern
from .tam import (
    assemble_A,
    coefficients_to_csv,
    design_protocol,
    execute_protocol,
    extract_coefficients,
    run_tam,
)

COMMANDS = ("coefficients", "matrix", "optimize", "simulate", "validate", "sweep")
LOADS_HEADER = ["bolt_id", "position", "order", "initial_kn", "final_kn"]


def _methods(cfg: RunConfig) -> list[str]:
    return ["eicm", "tam"] if cfg.method == "both" else [cfg.method]


def _stats(loads, target) -> dict[str, float]:
    s = load_stats(loads)
    return {
        "mean_kn": s.mean,
        "std_kn": s.std,
        "min_kn": s.min,
        "max_kn": s.max,
        "rel_std": s.std / target,
        "max_rel_dev": float(np.max(np.abs(loads.loads[loads.tightened] - target)) / target),
        "avg_rel_error": avg_relative_error(loads, LoadVector.uniform(len(loads), target)),
    }


def _coefficients(cfg: RunConfig):
    level = cfg.protocol_level or cfg.joint.target_load
    protocol = design_protocol(cfg.joint.n_bolts, level)
    log = execute_protocol(cfg.joint, cfg.bench, protocol)
    return protocol, extract_coefficients(log, protocol)


def make_plan(cfg: RunConfig, method: str, pattern: TighteningPattern | None = None,
              bench=None) -> AssemblyPlan:
    pattern = pattern or cfg.pattern
    bench = bench or cfg.bench
    if method == "tam":
        return run_tam(cfg.joint, bench, pattern, level=cfg.protocol_level)
    if cfg.iterative:
        return iterative_eicm(cfg.joint, bench, pattern, cfg.tol, cfg.max_iter)
    return run_eicm(cfg.joint, bench, pattern, cfg.probe_load)


def write_loads_csv(path, pattern: TighteningPattern, initial: LoadVector, final: LoadVector):
    """Rows in tightening order; ``bolt_id`` is the ring position."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOADS_HEADER)
        for k, p in enumerate(pattern.order, start=1):
            w.writerow([p, p, k, repr(initial[p]), repr(final[p])])


def read_loads_csv(path, n: int) -> tuple[LoadVector, LoadVector | None]:
    """Initial (and, when present, final) loads keyed by position."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "initial_kn" not in rows[0] or "position" not in rows[0]:
        raise ValidationError(f"{Path(path).name}: need columns 'position' and 'initial_kn'")
    initial = {int(r["position"]): float(r["initial_kn"]) for r in rows}
    final = None
    if all(r.get("final_kn") not in (None, "") for r in rows):
        final = LoadVector.from_mapping(n, {int(r["position"]): float(r["final_kn"]) for r in rows})
    return LoadVector.from_mapping(n, initial), final


def _plan_section(cfg, method, plan, out: Path, written: list):
    path = out / f"plan_{method}.csv"
    write_loads_csv(path, plan.pattern, plan.initial_loads, plan.predicted_final_loads)
    written.append(path)
    return {
        "method": plan.method,
        "iterations": plan.iterations,
        "initial_kn": {str(p): plan.initial_loads[p] for p in plan.pattern.order},
        "predicted": _stats(plan.predicted_final_loads, cfg.joint.target_load),
        "warnings": list(plan.warnings),
    }


def _sweep_row(cfg: RunConfig, label, coeffs, pattern_value, method):
    n = cfg.joint.n_bolts
    if isinstance(pattern_value, str):
        pattern, pname = make_pattern(pattern_value, n), pattern_value
    else:
        pattern, pname = make_pattern("custom", n, pattern_value), "custom"
    bench = dataclasses.replace(cfg.bench, variant="tetraparametric", coeffs=coeffs)
    row = {"label": label, "pattern": pname, "method": method,
           "alpha": coeffs.alpha, "beta": coeffs.beta, "gamma": coeffs.gamma, "delta": coeffs.delta}
    try:
        plan = make_plan(cfg, method, pattern, bench)
    except ComputationError as exc:
        return {**row, "error": str(exc)}
    _, final = run_sequence(cfg.joint, bench, pattern, plan.initial_loads)
    s = _stats(final, cfg.joint.target_load)
    return {**row, "max_initial_kn": float(plan.initial_loads.loads.max()),
            "mean_kn": s["mean_kn"], "std_kn": s["std_kn"],
            "max_rel_dev": s["max_rel_dev"], "error": ""}


def execute(command: str, cfg: RunConfig, loads_path=None) -> tuple[dict[str, Any], list[Path]]:
    """Run ``command``; write CSV outputs into ``cfg.output_dir``.

    Returns the report (a plain dict) and the list of files written,
    report file excluded.
    """
    if command not in COMMANDS:
        raise ValidationError(f"unknown command {command!r}; expected one of {COMMANDS}")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    report: dict[str, Any] = {"command": command, "config": cfg.echo()}
    target = cfg.joint.target_load

    if command == "coefficients":
        protocol, coeffs = _coefficients(cfg)
        path = out / "coefficients.csv"
        coefficients_to_csv(coeffs, path)
        written.append(path)
        report["protocol"] = {"tightenings": protocol.n_tightenings,
                              "measurements": protocol.n_measurements,
                              "level_kn": protocol.level}
        report["coefficients"] = dict(zip(("alpha", "beta", "gamma", "delta"), coeffs.as_tuple()))
        report["spread"] = dict(coeffs.spread)

    elif command == "matrix":
        report["matrices"] = {}
        for method in _methods(cfg):
            if method == "eicm":
                A = compute_A(build_sh(cfg.joint, cfg.bench, cfg.pattern, cfg.probe_load))
            else:
                A = assemble_A(cfg.joint.n_bolts, cfg.pattern, _coefficients(cfg)[1])
            path = out / f"matrix_{method}.csv"
            A.to_csv(path)
            written.append(path)
            report["matrices"][method] = path.name

    elif command in ("optimize", "validate"):
        report["plans"] = {}
        for method in _methods(cfg):
            plan = make_plan(cfg, method)
            section = _plan_section(cfg, method, plan, out, written)
            if command == "validate":
                _, final = run_sequence(cfg.joint, cfg.bench, plan.pattern, plan.initial_loads)
                path = out / f"validate_{method}.csv"
                write_loads_csv(path, plan.pattern, plan.initial_loads, final)
                written.append(path)
                section["simulated"] = _stats(final, target)
            report["plans"][method] = section

    elif command == "simulate":
        src = loads_path or cfg.initial_loads
        if src is None:
            raise ValidationError("simulate needs an initial-loads CSV (--loads or initial_loads key)")
        initial, _ = read_loads_csv(src, cfg.joint.n_bolts)
        _, final = run_sequence(cfg.joint, cfg.bench, cfg.pattern, initial)
        path = out / "simulated.csv"
        write_loads_csv(path, cfg.pattern, initial, final)
        written.append(path)
        report["simulated"] = _stats(final, target)
        report["final_kn"] = {str(p): final[p] for p in cfg.pattern.order}

    elif command == "sweep":
        sw = cfg.sweep
        if sw is None:
            raise ValidationError("sweep needs a [sweep] table in the config")
        jobs = [(label, c, p, m) for label, c in sw.coefficients
                for p in sw.patterns for m in _methods(cfg)]
        with ThreadPoolExecutor(max_workers=max(1, sw.workers)) as pool:
            rows = list(pool.map(lambda job: _sweep_row(cfg, *job), jobs))
        path = out / "sweep.csv"
        fields = ["label", "pattern", "method", "alpha", "beta", "gamma", "delta",
                  "max_initial_kn", "mean_kn", "std_kn", "max_rel_dev", "error"]
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fields, lineterminator="\n")
            w.writeheader()
            for row in rows:
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        written.append(path)
        report["sweep"] = rows

    return report, written


def _fmt(v):
    return f"{v:.1f}" if isinstance(v, float) else str(v)


def render_text(report: dict[str, Any]) -> str:
    """Human-readable report; forces rounded to 0.1 kN."""
    lines = [f"command: {report['command']}"]
    cfg = report["config"]
    j = cfg["joint"]
    lines.append(f"joint: {j['n_bolts']} bolts, target {j['target_load_kn']:.1f} kN"
                 + (f", scenario {j['scenario_label']}" if j["scenario_label"] else ""))
    lines.append(f"bench: {cfg['bench']['variant']}, pattern {cfg['pattern']} "
                 f"({'-'.join(map(str, cfg['order']))})")
    if "coefficients" in report:
        p = report["protocol"]
        lines.append(f"protocol: {p['tightenings']} tightenings, {p['measurements']} measurements "
                     f"at {p['level_kn']:.1f} kN")
        for k, v in report["coefficients"].items():
            lines.append(f"  {k:<6} {v:+.4f}  (spread {report['spread'][k]:.4f})")
    for method, name in report.get("matrices", {}).items():
        lines.append(f"matrix ({method}): {name}")
    for method, sec in report.get("plans", {}).items():
        lines.append(f"plan ({sec['method']}, {sec['iterations']} iteration(s)):")
        lines.append("  bolt  initial_kn")
        for p, v in sec["initial_kn"].items():
            lines.append(f"  {p:>4}  {v:10.1f}")
        for key in ("predicted", "simulated"):
            if key in sec:
                s = sec[key]
                lines.append(f"  {key} final: mean {s['mean_kn']:.1f} kN, std {s['std_kn']:.1f} kN, "
                             f"max deviation {100 * s['max_rel_dev']:.2f} %")
        for w in sec["warnings"]:
            lines.append(f"  WARNING {w}")
    if "simulated" in report:
        s = report["simulated"]
        lines.append(f"simulated final: mean {s['mean_kn']:.1f} kN, std {s['std_kn']:.1f} kN, "
                     f"max deviation {100 * s['max_rel_dev']:.2f} %")
        for p, v in report["final_kn"].items():
            lines.append(f"  {p:>4}  {v:10.1f}")
    if "sweep" in report:
        lines.append("label  pattern  method  max_initial_kn  mean_kn  std_kn")
        for r in report["sweep"]:
            if r["error"]:
                lines.append(f"{r['label']}  {r['pattern']}  {r['method']}  ERROR {r['error']}")
            else:
                lines.append("  ".join(_fmt(r[k]) for k in
                                       ("label", "pattern", "method", "max_initial_kn", "mean_kn", "std_kn")))
    return "\n".join(lines) + "\n"


def write_report(report: dict[str, Any], cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    if cfg.output_format == "json":
        path = out / "report.json"
        path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    else:
        path = out / "report.txt"
        path.write_text(render_text(report))
    return path


@click.command(context_settings={"help_option_names": ["-h", "--help"]})
@click.argument("command", type=click.Choice(COMMANDS))
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False),
              help="Output directory (overrides output.directory).")
@click.option("--loads", "loads_path", type=click.Path(exists=True, dir_okay=False),
              help="Initial-loads CSV for the simulate command.")
def cli(command, config, out_dir, loads_path):
    """Plan one-pass bolt tightening for a circular flange joint."""
    cfg = parse_config(config)
    if out_dir:
        cfg = dataclasses.replace(cfg, output_dir=Path(out_dir))
    report, _ = execute(command, cfg, loads_path)
    path = write_report(report, cfg)
    click.echo(path.read_text() if cfg.output_format == "csv" else f"report written to {path}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="boltseq", standalone_mode=False)
    except ValidationError as exc:
        for msg in exc.errors:
            click.echo(f"error: {msg}", err=True)
        return 1
    except ComputationError as exc:
        click.echo(f"computation error: {exc}", err=True)
        return 2
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        return 1
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
