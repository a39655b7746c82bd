import csv
import json
import math
import re

import pytest

from nvergo import cli
from nvergo.cli import ConfigError, config_from_dict, main, parse_config
from nvergo.experiments import ExperimentConfig

UNIT_SUFFIX = re.compile(r"_(eps|us|nats|bits|rad|rad_per_us|dimless|per_rad_per_us)$")


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


def test_empty_config_is_default(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{}")
    cfg = parse_config(path)
    assert cfg == ExperimentConfig()
    assert (cfg.epsilon, cfg.tau_us, cfg.noise.t2_star_us, cfg.noise.p_e) == (1.05, 0.5, 56.0, 0.97)


def test_negative_tau():
    with pytest.raises(ConfigError, match="tau must be > 0"):
        config_from_dict({"tau_us": -0.5})


def test_nested_override():
    cfg = config_from_dict({"noise": {"t2_star_us": 1.5}, "timing": {"gap_us": 2}})
    assert cfg.noise.t2_star_us == 1.5 and cfg.noise.p_e == 0.97
    assert cfg.timing.gap_us == 2.0
    assert cfg.t_dephase_us == 4.5


@pytest.mark.parametrize(
    "data, path",
    [
        ({"noise": {"t2star": 1}}, "noise.t2star"),
        ({"bogus": 1}, "bogus"),
        ({"noise": {"p_e": "high"}}, "noise.p_e"),
        ({"grape": {"restarts": 1.5}}, "grape.restarts"),
        ({"grape": {"cross_talk": 1}}, "grape.cross_talk"),
        ({"noise": 3}, "noise"),
    ],
)
def test_config_errors_name_the_field(data, path):
    with pytest.raises(ConfigError) as info:
        config_from_dict(data)
    assert info.value.path == path


def test_bad_json(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        parse_config(path)
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "missing.json")


def test_fmt():
    assert cli.fmt(None) == ""
    assert cli.fmt(math.inf) == "inf"
    assert cli.fmt(True) == "true"
    assert cli.fmt(3) == "3"
    assert cli.fmt(1 / 3) == "0.333333333333"


def test_fig3_ideal(tmp_path):
    assert run(tmp_path, "fig3", "--mode", "ideal") == 0
    rows = read_csv(tmp_path / "fig3.csv")
    states = [r for r in rows if r["exact_energy_eps"] != ""]
    assert len(states) == 6
    resid = rows[-1]
    assert resid["label"] == "additivity_residual"
    assert abs(float(resid["energy_eps"])) < 1e-10
    manifest = json.loads((tmp_path / "fig3_manifest.json").read_text())
    assert manifest["command"] == "fig3"
    assert manifest["config_hash"] == ExperimentConfig().digest()
    assert manifest["outputs"] == ["fig3.csv"]


def test_fig4_grid(tmp_path):
    assert run(tmp_path, "fig4", "--grid", "0:0.9428:10") == 0
    assert len(read_csv(tmp_path / "fig4.csv")) == 10
    curve = read_csv(tmp_path / "fig4_curve.csv")
    assert len(curve) == 101
    assert curve[0]["coherent_ergotropy_eps"] == ""


def test_grape_table(tmp_path, capsys):
    assert run(tmp_path, "grape", "--target", "v_pi") == 0
    rows = read_csv(tmp_path / "grape_v_pi.csv")
    assert len(rows) == 4
    assert list(rows[0]) == ["label", "duration_us", "omega1_rad_per_us", "phi1_rad", "omega2_rad_per_us", "phi2_rad"]
    line = capsys.readouterr().out
    assert float(line.split()[2]) >= 0.99


def test_unknown_target(tmp_path):
    assert run(tmp_path, "grape", "--target", "cnot") == 1


def test_protocol_grid(tmp_path):
    assert run(tmp_path, "protocol", "--grid", "0.1:2.9:5") == 0
    rows = read_csv(tmp_path / "protocol.csv")
    assert len(rows) == 5 * 6
    for r in rows:
        assert abs(float(r["energy_norm_eps"]) - float(r["exact_energy_eps"])) < 1e-11


def test_ergo_and_figs2(tmp_path):
    assert run(tmp_path, "ergo") == 0
    assert len(read_csv(tmp_path / "ergo.csv")) == 6
    assert run(tmp_path, "figs2") == 0
    rows = read_csv(tmp_path / "figs2.csv")
    assert [r["label"] for r in rows] == ["ideal", "T2*=56us", "T2*=1.5us"]


def test_headers_carry_units(tmp_path):
    assert run(tmp_path, "all", "--grid", "0:0.9:3") == 0
    for path in tmp_path.glob("*.csv"):
        header = next(csv.reader(open(path)))
        for col in header[1:]:
            assert UNIT_SUFFIX.search(col), (path.name, col)


@pytest.mark.parametrize("mode", ["ideal", "noisy"])
def test_byte_identical_repeat(tmp_path, mode):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["fig3", "--mode", mode, "--seed", "3", "--out", str(out)]) == 0
    data = (a / "fig3.csv").read_bytes()
    assert data == (b / "fig3.csv").read_bytes()
    assert b"\r" not in data


def test_config_file_error_exit(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"tau_us": -1}))
    assert run(tmp_path, "fig3", "--config", str(path)) == 1
    assert "tau must be > 0" in capsys.readouterr().err


def test_threshold_exit(tmp_path):
    # a starved optimizer budget misses the 0.99 pulse bar
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"grape": {"n_segments": 1, "restarts": 1, "max_iterations": 2}}))
    with pytest.warns(UserWarning):
        assert run(tmp_path, "grape", "--config", str(path)) == 2


def test_thread_env(monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "4")
    assert cli.thread_count() == 4
    monkeypatch.setenv(cli.THREADS_ENV, "zero")
    with pytest.raises(ConfigError):
        cli.thread_count()


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit):
        main(["--help"])
    out = capsys.readouterr().out
    assert '"t2_star_us": 56.0' in out and cli.THREADS_ENV in out
