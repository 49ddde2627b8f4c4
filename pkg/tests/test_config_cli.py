import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ibvpcheck import cli
from ibvpcheck.config import ConfigError, DataSpec, ExperimentConfig

finite = st.floats(-5, 5, allow_nan=False).map(lambda v: round(v, 6))
specs = st.one_of(
    finite.map(lambda c: f"const:{c}"),
    st.tuples(finite, finite, finite).map(lambda p: "step:%r:%r:%r" % p),
    st.tuples(st.sampled_from(["sin", "cos"]), finite, finite, finite).map(lambda p: "%s:%r:%r:%r" % p),
)


@given(u0=specs, ul=specs, ur=specs, cells=st.integers(4, 5000), seed=st.integers(0, 2**31),
       T=st.floats(0.01, 10), tol=st.floats(1e-14, 1e-3))
def test_ini_round_trip(u0, ul, ur, cells, seed, T, tol):
    cfg = ExperimentConfig(u0=u0, ub_left=ul, ub_right=ur, cells=cells, seed=seed, horizon=T, tol=tol)
    back = ExperimentConfig.from_ini(cfg.to_ini())
    assert back == cfg
    assert back.digest() == cfg.digest()


def test_data_spec_values():
    np.testing.assert_allclose(DataSpec.parse("sin:0.25:1:0.5")(np.array([0.25])), [0.75])
    np.testing.assert_array_equal(DataSpec.parse("step:0.5:1:-1")(np.array([0.2, 0.5])), [1, -1])
    assert DataSpec.parse("step:0.5:1:-1").breaks == (0.5,)
    assert DataSpec.parse("cos:2:1:-1").bound() == 3.0


@pytest.mark.parametrize("text", ["ramp:1", "const", "const:1:2", "sin:a:1", "step:0:1"])
def test_bad_data_spec(text):
    with pytest.raises(ConfigError):
        DataSpec.parse(text)


@pytest.mark.parametrize("text", [
    "[problem]\nflux = nope\n",
    "[problem]\ndomain = 1, 0\n",
    "[grid]\ncells = 2\n",
    "[grid]\nspeed = 3\n",
    "[other]\nx = 1\n",
    "[run]\nexperiment = bogus\n",
    "[run]\nseed = one\n",
    "not an ini",
])
def test_bad_config_rejected(text):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_ini(text)


def run(tmp_path, *argv):
    return cli.main(list(argv) + ["--output", str(tmp_path)])


def test_check_boundary_exit_codes(tmp_path, capsys):
    assert run(tmp_path, "check-boundary", "--trace", "1", "--datum", "-1") == cli.EXIT_OK
    assert run(tmp_path, "check-boundary", "--trace", "0.5", "--datum", "1", "--side", "left") == \
        cli.EXIT_VERDICT
    out = capsys.readouterr().out
    assert out.count("violated") == 6
    body = json.loads((tmp_path / "check-boundary.json").read_text())
    assert body["bln"]["worst_value"] == pytest.approx(-0.375)


def test_usage_and_config_errors_exit_1(tmp_path, capsys):
    assert cli.main(["no-such-command"]) == cli.EXIT_USAGE
    assert cli.main(["check-boundary", "--trace", "1"]) == cli.EXIT_USAGE
    assert run(tmp_path, "solve", "--flux", "bogus") == cli.EXIT_USAGE
    assert run(tmp_path, "solve", "--config", str(tmp_path / "missing.ini")) == cli.EXIT_USAGE
    assert run(tmp_path, "solve", "--u0", "ramp:3") == cli.EXIT_USAGE
    capsys.readouterr()


def test_manifest_fields(tmp_path, capsys):
    assert run(tmp_path, "solve", "--grid", "50", "--seed", "11") == cli.EXIT_OK
    man = json.loads((tmp_path / "solve-manifest.json").read_text())
    for key in ("tool", "version", "command", "config", "config_hash", "seed", "backend",
                "verdict", "summary", "outputs"):
        assert key in man
    assert man["seed"] == 11 and man["config"]["cells"] == 50
    assert man["outputs"] == ["field.bin", "field.csv", "trace.csv"]
    assert ExperimentConfig(cells=50, seed=11).digest() == man["config_hash"]
    capsys.readouterr()


def test_output_dir_precedence(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    monkeypatch.chdir(tmp_path)
    assert cli.main(["check-boundary", "--trace", "1", "--datum", "1"]) == 0
    assert (tmp_path / "env" / "check-boundary.json").exists()
    assert cli.main(["check-boundary", "--trace", "1", "--datum", "1",
                     "--output", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "check-boundary.json").exists()
    monkeypatch.delenv(cli.OUTPUT_ENV)
    ini = tmp_path / "c.ini"
    ini.write_text(ExperimentConfig(output=str(tmp_path / "cfg")).to_ini())
    assert cli.main(["check-boundary", "--trace", "1", "--datum", "1", "--config", str(ini)]) == 0
    assert (tmp_path / "cfg" / "check-boundary.json").exists()
    capsys.readouterr()


def test_sweep_is_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert cli.main(["equivalence-sweep", "--samples", "300", "--seed", "5",
                         "--output", str(d)]) == 0
    for name in ("sweep-burgers.csv", "sweep-burgers.json", "equivalence-sweep-manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    capsys.readouterr()


def test_sweep_fault_injection_exits_2(tmp_path, capsys):
    code = cli.main(["equivalence-sweep", "--samples", "200", "--inject-fault", "sign-form",
                     "--output", str(tmp_path)])
    assert code == cli.EXIT_VERDICT
    capsys.readouterr()


def test_solve_series_rate_on_smooth_data(tmp_path, capsys):
    code = run(tmp_path, "solve", "--grid", "50", "--series", "3", "--horizon", "0.3",
               "--u0", "sin:0.25:1:0.5", "--ub-left", "const:0.5", "--ub-right", "const:0.5")
    assert code == cli.EXIT_OK
    conv = json.loads((tmp_path / "solve-manifest.json").read_text())["summary"]["self_convergence"]
    assert conv["fitted_rate"] >= 0.5
    capsys.readouterr()


def test_residuals_constant_fixture(tmp_path, capsys):
    code = run(tmp_path, "residuals", "--fixture", "constant", "--k-points", "9", "--per-axis", "2")
    assert code == cli.EXIT_OK
    text = capsys.readouterr().out
    assert [line.split()[0] for line in text.splitlines()] == ["BLN", "E", "MV+", "MV-", "RE"]
    assert (tmp_path / "residual-surface.csv").exists()


def test_min_constant_command(tmp_path, capsys):
    assert run(tmp_path, "min-constant", "--k-points", "101") == cli.EXIT_OK
    body = json.loads((tmp_path / "min-constant.json").read_text())
    assert 0.98 <= body["c_star"] <= 1.02
    assert body["passes_at_2"] and not body["passes_at_half"]
    capsys.readouterr()


def test_verify_pairs_command(tmp_path, capsys):
    assert run(tmp_path, "verify-pairs", "--samples", "100") == cli.EXIT_OK
    capsys.readouterr()


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ibvpcheck.cli", "check-boundary", "--trace", "0.5",
                           "--datum", "1", "--side", "left", "--output", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert "bln" in proc.stdout
