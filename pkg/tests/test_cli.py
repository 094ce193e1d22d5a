import json

import pytest

from infoflow import cli
from infoflow.metrics import LEDGER_COLUMNS

OU_CONFIG = """
[scenario]
name = ou_smoke

[model]
preset = ou
rate = 1.0
sigma_sq = 2.0
obs_gain = 1.0

[grid]
x_min = -6.0
x_max = 6.0
n_cells = 64

[time]
dt = 1e-3
horizon = 0.2
sample_stride = 40

[ensemble]
n_trajectories = 25
seed = 99
x0_mean = 0.0
x0_var = 0.5

[output]
directory = {outdir}
density_snapshots = true
"""


def write_config(tmp_path, text, name="scenario.ini", outdir=None):
    outdir = outdir or (tmp_path / "out")
    cfg = tmp_path / name
    cfg.write_text(text.format(outdir=outdir))
    return cfg, outdir


def test_run_produces_ledger_and_report(tmp_path, capsys):
    cfg, outdir = write_config(tmp_path, OU_CONFIG)
    assert cli.main(["run", str(cfg)]) == 0
    lines = (outdir / "ledger.csv").read_text().splitlines()
    assert lines[0] == ",".join(LEDGER_COLUMNS)
    assert len(lines) == 1 + 6  # t = 0.0 .. 0.2 in steps of 0.04
    report = json.loads((outdir / "report.json").read_text())
    assert report["scenario"] == "ou_smoke"
    assert report["invariants"]["all_pass"]
    snap = (outdir / "snapshots.csv").read_text().splitlines()
    assert snap[0] == "t,x,rho,rho_hat_mean"
    assert len(snap) == 1 + 6 * 64


def test_rerun_is_byte_identical(tmp_path):
    cfg1, out1 = write_config(tmp_path, OU_CONFIG, "a.ini", tmp_path / "o1")
    cfg2, out2 = write_config(tmp_path, OU_CONFIG, "b.ini", tmp_path / "o2")
    assert cli.main(["run", str(cfg1)]) == 0
    assert cli.main(["run", str(cfg2)]) == 0
    assert (out1 / "ledger.csv").read_bytes() == (out2 / "ledger.csv").read_bytes()
    r1 = json.loads((out1 / "report.json").read_text())
    r2 = json.loads((out2 / "report.json").read_text())
    r1.pop("wall_clock_s"), r2.pop("wall_clock_s")
    r1.pop("config_echo"), r2.pop("config_echo")  # echoes differ in outdir
    assert r1 == r2


def test_bad_dt_exits_2_without_output(tmp_path):
    text = OU_CONFIG.replace("dt = 1e-3", "dt = -1e-3")
    cfg, outdir = write_config(tmp_path, text)
    assert cli.main(["run", str(cfg)]) == 2
    assert not outdir.exists()


def test_missing_seed_exits_2(tmp_path):
    text = OU_CONFIG.replace("seed = 99\n", "")
    cfg, outdir = write_config(tmp_path, text)
    assert cli.main(["run", str(cfg)]) == 2


def test_short_horizon_exits_2(tmp_path):
    text = OU_CONFIG.replace("horizon = 0.2", "horizon = 5e-3")
    cfg, _ = write_config(tmp_path, text)
    assert cli.main(["run", str(cfg)]) == 2


def test_brownian_run_refused(tmp_path):
    text = OU_CONFIG.replace("preset = ou", "preset = brownian") \
                    .replace("rate = 1.0\n", "") \
                    .replace("sigma_sq = 2.0", "sigma_sq = 1.0")
    cfg, _ = write_config(tmp_path, text)
    assert cli.main(["run", str(cfg)]) == 2


def test_missing_config_file(tmp_path):
    assert cli.main(["run", str(tmp_path / "none.ini")]) == 2


def test_unknown_suite_exits_2():
    with pytest.raises(SystemExit) as err:
        cli.main(["check", "bogus"])
    assert err.value.code == 2


def test_check_gaussian_suite(tmp_path, capsys):
    report_path = tmp_path / "check.json"
    code = cli.main(["check", "gaussian", "--report", str(report_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert out.count("[PASS]") == 2
    payload = json.loads(report_path.read_text())
    assert payload["all_pass"] is True
    assert len(payload["checks"]) == 2


def test_check_determinism(tmp_path):
    p1, p2 = tmp_path / "r1.json", tmp_path / "r2.json"
    cli.main(["check", "gaussian", "--report", str(p1)])
    cli.main(["check", "gaussian", "--report", str(p2)])
    r1 = json.loads(p1.read_text())
    r2 = json.loads(p2.read_text())
    for rep in (r1, r2):
        rep.pop("wall_clock_s")
        for chk in rep["checks"]:
            chk.pop("runtime_s")
    assert r1 == r2


def test_list_scenarios(capsys):
    assert cli.main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    for name in ("brownian", "ou", "lqg", "double_well",
                 "zero", "linear_gain", "bang_bang"):
        assert name in out


def test_workers_env_validated(tmp_path, monkeypatch):
    monkeypatch.setenv("INFOFLOW_WORKERS", "zero")
    cfg, _ = write_config(tmp_path, OU_CONFIG)
    assert cli.main(["run", str(cfg)]) == 2
    monkeypatch.setenv("INFOFLOW_WORKERS", "4")
    assert cli.main(["run", str(cfg)]) == 0


@pytest.mark.filterwarnings("ignore:mean-drift estimation")
def test_policy_section_parsed(tmp_path):
    text = OU_CONFIG + "\n[policy]\nname = linear_gain\ngain = 0.5\nbound = 5.0\n"
    cfg, outdir = write_config(tmp_path, text)
    assert cli.main(["run", str(cfg)]) == 0
    report = json.loads((outdir / "report.json").read_text())
    assert report["ledger_metadata"]["policy"] == "linear_gain"
