import csv
import json
import math
import subprocess
import sys

import pytest

from bbmkit.bbm import default_s_sequence
from bbmkit.cli import ConfigError, main, parse_config

STUDY = """
command = "study"
domain.kind = "ball"
domain.radius = 1.0
function.name = "linear"
function.a = [1.0, 0.0]
spec.p = 2
spec.q = 2
spec.tau = 0.5
quad.outer.n = 16
"""

DETECT = """
command = "detect"
domain.kind = "box"
domain.lo = [-0.5, -0.5]
domain.hi = [0.5, 0.5]
function.name = "halfspace_indicator"
spec.p = 2
spec.q = 2
"""


def _write(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_minimal_constant_document():
    cfg = parse_config('command = "constant"\nN = 2\np = 2\nq = 2\n')
    assert cfg.command == "constant" and cfg.dim == 2
    assert cfg.spec["p"] == 2.0 and cfg.spec["q"] == 2.0


def test_tau_out_of_range():
    with pytest.raises(ConfigError, match=r"tau.*\(0, 1\)"):
        parse_config(STUDY.replace("spec.tau = 0.5", "spec.tau = 1.5"))


def test_study_default_sequence():
    cfg = parse_config(STUDY)
    assert cfg.spec["s_sequence"] == default_s_sequence()


@pytest.mark.parametrize(
    "extra,where",
    [
        ("spec.sigma = 1", "spec.sigma"),
        ("quad.outer.nn = 3", "quad.outer.nn"),
        ("quad.order = 3", "quad.order"),
        ("domain.side = 3", "domain.side"),
        ("function.b = 3", "function.b"),
        ("colour = 3", "colour"),
    ],
)
def test_unknown_keys_named(extra, where):
    with pytest.raises(ConfigError, match=f"unknown key {where}"):
        parse_config(STUDY + extra + "\n")


def test_missing_keys():
    with pytest.raises(ConfigError, match="command"):
        parse_config("N = 2\n")
    with pytest.raises(ConfigError, match="domain.kind"):
        parse_config('command = "study"\nfunction.name = "linear"\n')
    with pytest.raises(ConfigError, match="spec.s"):
        parse_config(STUDY.replace('"study"', '"seminorm"'))
    with pytest.raises(ConfigError, match="truncation"):
        parse_config(STUDY.replace('"ball"', '"strip"').replace("domain.radius = 1.0\n", ""))


def test_regime_warning_collected():
    cfg = parse_config(STUDY.replace("spec.p = 2", "spec.p = 1"))
    assert any("outside the regimes" in w for w in cfg.warnings)


def test_syntax_error():
    with pytest.raises(ConfigError, match="syntax"):
        parse_config("command = \n")


def test_study_run(tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(["--config", _write(tmp_path, STUDY), "--out", str(out), "--assert"])
    assert rc == 0
    with open(out / "results.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 10
    assert list(rows[0]) == ["s", "one_minus_s", "raw_p_power", "scaled", "reference", "rel_error", "verdict"]
    report = json.loads((out / "report.json").read_text())
    assert report["verdict"] == "converged"
    assert report["config"]["spec"]["s_sequence"] == default_s_sequence()
    assert report["config"]["quad"]["sphere_order"] == 64
    # full precision: every value round-trips
    for row in rows:
        assert float(row["s"]) in default_s_sequence()
    assert float(rows[-1]["scaled"]) == pytest.approx(report["result"]["scaled_values"][-1], rel=0, abs=0)


def test_constant_prints(tmp_path, capsys):
    rc = main(["--config", _write(tmp_path, 'command = "constant"\nN = 2\np = 2\nq = 2\n'), "--out", str(tmp_path)])
    assert rc == 0
    printed = capsys.readouterr().out.strip()
    assert printed.startswith("1.5707963")
    assert float(printed) == pytest.approx(math.pi / 2, abs=1e-12)


def test_detect_exit_code(tmp_path):
    out = tmp_path / "d"
    rc = main(["--config", _write(tmp_path, DETECT), "--out", str(out), "--assert"])
    assert rc != 0
    report = json.loads((out / "report.json").read_text())
    assert report["verdict"] == "diverging_suggests_not_w1p"
    assert "evidence, not proof" in report["caveat"]
    # without --assert the run itself succeeds
    assert main(["--config", _write(tmp_path, DETECT), "--out", str(out)]) == 0


def test_config_error_exit_code(tmp_path):
    assert main(["--config", _write(tmp_path, STUDY.replace("0.5", "1.5"))]) == 2
    assert main(["--config", str(tmp_path / "missing.toml")]) == 2


def test_byte_identical_runs(tmp_path):
    cfg = _write(tmp_path, STUDY.replace("quad.outer.n = 16", "quad.outer.n = 8"))
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["--config", cfg, "--out", str(a), "--seed", "3"]) == 0
    assert main(["--config", cfg, "--out", str(b), "--seed", "3"]) == 0
    for name in ("results.csv", "report.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_threads_do_not_change_numbers(tmp_path):
    cfg = _write(tmp_path, STUDY.replace("quad.outer.n = 16", "quad.outer.n = 8"))
    a, b = tmp_path / "a", tmp_path / "b"
    main(["--config", cfg, "--out", str(a), "--threads", "1"])
    main(["--config", cfg, "--out", str(b), "--threads", "4"])
    assert (a / "results.csv").read_bytes() == (b / "results.csv").read_bytes()


@pytest.mark.parametrize(
    "body,verdict",
    [
        (
            'command = "pointwise"\ndomain.kind = "ball"\nfunction.name = "poly_x1sq_x2"\nstudy.x = [0.3, 0.2]\n',
            "converged",
        ),
        (
            'command = "embedding"\ndomain.kind = "ball"\nfunction.name = "gaussian_bump"\n'
            'spec.variant = "hat"\nspec.R = 0.2\nspec.p = 2\nspec.q = 3\nquad.outer.n = 8\n',
            "satisfied",
        ),
        (
            'command = "tails"\ndomain.kind = "strip"\nfunction.name = "linear"\nspec.s = 0.9\n'
            'study.i_sequence = [2, 4, 8]\nquad.outer.kind = "gauss"\nquad.outer.n = 12\n',
            "nonincreasing",
        ),
        (
            'command = "seminorm"\ndomain.kind = "ball"\nfunction.name = "linear"\nspec.s = 0.9\nquad.outer.n = 8\n',
            "computed",
        ),
        (
            'command = "double-limit"\ndomain.kind = "ball"\nfunction.name = "linear"\n'
            "study.lambda_sequence = [0.4, 0.2]\nspec.s_sequence = [0.9, 0.99, 0.999]\nquad.outer.n = 8\n",
            None,
        ),
    ],
)
def test_other_commands(tmp_path, body, verdict):
    out = tmp_path / "o"
    assert main(["--config", _write(tmp_path, body), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    if verdict is not None:
        assert report["verdict"] == verdict
    assert (out / "results.csv").exists()


def test_module_entry_point(tmp_path):
    cfg = _write(tmp_path, 'command = "constant"\nN = 3\np = 2\nq = 2\n')
    res = subprocess.run(
        [sys.executable, "-m", "bbmkit", "--config", cfg, "--out", str(tmp_path)],
        capture_output=True,
        text=True,
        check=True,
    )
    # K(3,2,2) = C_{3,2}/2 = (4π/3)/2
    assert float(res.stdout) == pytest.approx(2 * math.pi / 3, rel=1e-10)
