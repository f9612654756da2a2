import json
import textwrap

import numpy as np
import pytest

from boltseq import InteractionMatrix, ValidationError
from boltseq.cli import execute, main, read_loads_csv
from boltseq.config import ConfigError, parse_config
from boltseq.tam import coefficients_from_csv

BASE = """
pattern = "{pattern}"
method = "{method}"

[joint]
n_bolts = {n}
target_load = 200.0
scenario_label = "mu=0.2"

[bench]
variant = "tetraparametric"
alpha = {alpha}
beta = {beta}
gamma = {gamma}
delta = {delta}

[output]
directory = "{out}"
format = "{fmt}"
"""


@pytest.fixture
def write_cfg(tmp_path):
    def write(extra="", **kw):
        params = dict(pattern="pattern1", method="eicm", n=20, alpha=-0.147, beta=-0.147,
                      gamma=-0.018, delta=0.002, out=str(tmp_path / "out"), fmt="csv")
        params.update(kw)
        path = tmp_path / "run.toml"
        path.write_text(BASE.format(**params) + textwrap.dedent(extra))
        return path
    return write


def test_minimal_config_defaults(write_cfg):
    cfg = parse_config(write_cfg())
    assert cfg.joint.n_bolts == 20 and cfg.joint.target_load == 200.0
    assert cfg.probe_load is None and cfg.iterative is False and cfg.max_iter == 20
    echo = cfg.echo()
    assert echo["bench"]["alpha"] == -0.147
    assert echo["iterative"] == {"enabled": False, "tol": 1e-3, "max_iter": 20}
    assert echo["joint"]["warn_fraction"] == 0.9


def test_unknown_key_suggestion(tmp_path, write_cfg):
    path = write_cfg()
    text = path.read_text().replace('pattern = "pattern1"', 'patern = "pattern1"')
    path.write_text(text)
    line = text.splitlines().index('patern = "pattern1"') + 1
    with pytest.raises(ConfigError) as info:
        parse_config(path)
    msg = str(info.value)
    assert "did you mean 'pattern'" in msg
    assert f"run.toml:{line}" in msg


def test_pattern_needs_20(write_cfg):
    with pytest.raises(ValidationError, match="pattern1 requires 20 bolts"):
        parse_config(write_cfg(n=16))


def test_unit_conversion_in_config(tmp_path, write_cfg):
    path = write_cfg()
    path.write_text(path.read_text().replace("target_load = 200.0", 'target_load = 200000.0\nunit = "N"'))
    assert parse_config(path).joint.target_load == pytest.approx(200.0)


def test_type_errors_reported(write_cfg):
    with pytest.raises(ConfigError, match="joint.n_bolts must be int"):
        parse_config(write_cfg(n='"twenty"'))


def test_validate_linear_exact(write_cfg):
    cfg = parse_config(write_cfg(pattern="pattern2"))
    report, _ = execute("validate", cfg)
    s = report["plans"]["eicm"]["simulated"]
    assert s["mean_kn"] == pytest.approx(200.0, rel=1e-12)
    assert s["rel_std"] <= 1e-9


def test_optimize_star_circular(write_cfg):
    cfg = parse_config(write_cfg(pattern="star_circular", method="tam"))
    _, files = execute("optimize", cfg)
    initial, final = read_loads_csv(files[0], 20)
    lines = files[0].read_text().splitlines()
    assert lines[0] == "bolt_id,position,order,initial_kn,final_kn"
    assert initial[20] == 200.0
    # bolt 5 only sees the small gain from bolt 7 two positions away
    assert initial[5] == pytest.approx(200.0, rel=0.005)
    assert np.allclose(final.loads, 200.0, rtol=1e-12)


def test_coefficients_echo(write_cfg):
    cfg = parse_config(write_cfg(alpha=-0.139, beta=-0.138, gamma=-0.019, delta=-0.002))
    report, files = execute("coefficients", cfg)
    got = report["coefficients"]
    assert [round(got[k], 3) for k in ("alpha", "beta", "gamma", "delta")] == \
        [-0.139, -0.138, -0.019, -0.002]
    assert report["protocol"] == {"tightenings": 11, "measurements": 19, "level_kn": 200.0}
    assert coefficients_from_csv(files[0]).alpha == pytest.approx(-0.139, abs=1e-12)


def test_matrix_both(write_cfg):
    cfg = parse_config(write_cfg(method="both"))
    _, files = execute("matrix", cfg)
    a, b = (InteractionMatrix.from_csv(f) for f in files)
    assert a.order == cfg.pattern.order
    assert np.max(np.abs(a.a - b.a)) <= 1e-12


def test_simulate_from_loads_file(write_cfg, tmp_path):
    cfg = parse_config(write_cfg(method="tam"))
    _, files = execute("optimize", cfg)
    report, out = execute("simulate", cfg, loads_path=files[0])
    assert report["simulated"]["max_rel_dev"] <= 1e-9
    with pytest.raises(ValidationError, match="initial-loads"):
        execute("simulate", cfg)


def test_csv_roundtrip_exact(write_cfg):
    cfg = parse_config(write_cfg(method="eicm", pattern="pattern2"))
    from boltseq.cli import make_plan
    plan = make_plan(cfg, "eicm")
    _, files = execute("optimize", cfg)
    initial, final = read_loads_csv(files[0], 20)
    assert np.max(np.abs(initial.loads - plan.initial_loads.loads)) <= 1e-12
    assert np.max(np.abs(final.loads - plan.predicted_final_loads.loads)) <= 1e-12


def test_sweep_rows_in_config_order(write_cfg):
    extra = """
    [sweep]
    patterns = ["pattern1", "pattern2"]
    coefficients = [
      {label = "mu=0.2", alpha = -0.147, beta = -0.147, gamma = -0.018, delta = 0.002},
      {label = "mu=0.3", alpha = -0.139, beta = -0.138, gamma = -0.019, delta = -0.002},
    ]
    workers = 4
    """
    cfg = parse_config(write_cfg(extra, method="both"))
    report, files = execute("sweep", cfg)
    keys = [(r["label"], r["pattern"], r["method"]) for r in report["sweep"]]
    assert keys == [(l, p, m) for l in ("mu=0.2", "mu=0.3")
                    for p in ("pattern1", "pattern2") for m in ("eicm", "tam")]
    assert all(abs(r["mean_kn"] - 200) < 1e-9 for r in report["sweep"])
    assert len(files[0].read_text().splitlines()) == 9


def test_iterative_config(write_cfg):
    extra = """
    [iterative]
    enabled = true
    tol = 1e-4
    max_iter = 10
    """
    path = write_cfg(extra)
    path.write_text(path.read_text().replace(
        "delta = 0.002", "delta = 0.002\nnonlinearity_exponent = 0.5\nreference_load = 200.0"))
    report, _ = execute("optimize", parse_config(path))
    sec = report["plans"]["eicm"]
    assert sec["method"] == "eicm-iterative"
    assert sec["predicted"]["max_rel_dev"] <= 1e-4


def test_determinism_byte_identical(write_cfg, tmp_path):
    path = write_cfg(method="both", fmt="json")
    path.write_text(path.read_text().replace("delta = 0.002", "delta = 0.002\nnoise = true\nnoise_seed = 5"))
    contents = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["validate", str(path), "--out", str(out)]) == 0
        contents.append({f.name: f.read_bytes() for f in sorted(out.iterdir())})
    a, b = contents
    # reports echo the output directory; everything else must match byte for byte
    assert a.keys() == b.keys()
    for name in a:
        if name != "report.json":
            assert a[name] == b[name]
    ra, rb = (json.loads(c["report.json"]) for c in contents)
    ra["config"]["output"].pop("directory"), rb["config"]["output"].pop("directory")
    assert ra == rb


def test_exit_codes(write_cfg, tmp_path, capsys):
    assert main(["optimize", str(write_cfg())]) == 0
    bad = write_cfg(n=16)
    assert main(["optimize", str(bad)]) == 1
    assert "pattern1 requires 20 bolts" in capsys.readouterr().err
    # a strong gain makes the first bolts need negative loads
    infeasible = write_cfg(alpha=1.5, beta=1.5, gamma=1.5, delta=1.5)
    assert main(["optimize", str(infeasible)]) == 2
    assert "infeasible target" in capsys.readouterr().err
    assert main(["nonsense", str(bad)]) == 1


def test_text_report_rounding(write_cfg, tmp_path):
    path = write_cfg()
    assert main(["optimize", str(path)]) == 0
    text = (tmp_path / "out" / "report.txt").read_text()
    assert "target 200.0 kN" in text
    assert "267.3" in text or "267.4" in text
