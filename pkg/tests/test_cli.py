import subprocess
import sys
from pathlib import Path

import pytest

from sqfock import cli, scenarios
from sqfock.errors import NonconvergentIntegration
from sqfock.table import read_csv


def write(tmp_path, text, name="c.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_list_scenarios(capsys):
    assert cli.main(["list-scenarios"]) == 0
    names = [line.split()[0] for line in capsys.readouterr().out.splitlines()]
    assert names == list(scenarios.SCENARIOS)


def test_run_writes_hashed_csv(tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["run", "--scenario", "fig1c", "--out", str(out)]) == 0
    printed = capsys.readouterr().out.split()
    assert sorted(p.rsplit("/", 1)[-1] for p in printed) == ["fig1c.csv", "fig1c_crossing.csv"]
    files = sorted(out.glob("*.csv"))
    assert len(files) == 2
    for f in files:
        header, rows, comments = read_csv(f)
        assert rows and header
        assert any(c.startswith("config_sha256=") for c in comments)
    text = files[0].read_text().splitlines()
    assert text[0].startswith("# sqfock fig1c")


def test_run_uses_config_scenario_and_output_path(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = write(tmp_path, 'scenario = "fig3c"\n[protocol]\nk_points = 2\nr_points = 3\n'
                          '[output]\npath = "res"\nprecision = 6\n')
    assert cli.main(["run", "--config", cfg]) == 0
    header, rows, _ = read_csv(tmp_path / "res" / "fig3c.csv")
    assert len(rows) == 6


def test_seventeen_digit_default(tmp_path):
    assert cli.main(["run", "--scenario", "fig1c", "--out", str(tmp_path)]) == 0
    lines = [l for l in (tmp_path / "fig1c.csv").read_text().splitlines() if not l.startswith("#")]
    # r = 0.025 needs all 17 digits to round-trip
    assert "0.025000000000000001" in lines[2]


def test_validate_reports_rwa(tmp_path, capsys):
    cfg = write(tmp_path, 'scenario = "fig2"\n')
    assert cli.main(["validate", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "valid fig2 config" in out and "rwa ok" in out


def test_validate_closed_form(tmp_path, capsys):
    cfg = write(tmp_path, 'scenario = "fig1c"\n')
    assert cli.main(["validate", "--config", cfg]) == 0
    assert "closed-form" in capsys.readouterr().out


@pytest.mark.parametrize("text", [
    'scenario = "fig9"\n',
    'scenario = "fig1c"\n[model]\nkerr = -1.0\n',
    'scenario = "fig1c"\n[protocol]\nbogus = 1\n',
    '[model\n',
])
def test_config_errors_exit_2(tmp_path, capsys, text):
    cfg = write(tmp_path, text)
    assert cli.main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_missing_config_and_output(tmp_path):
    assert cli.main(["validate", "--config", str(tmp_path / "none.toml")]) == 2
    assert cli.main(["run", "--scenario", "fig1c"]) == 2
    assert cli.main(["run", "--out", str(tmp_path)]) == 2


def test_scenario_flag_conflict(tmp_path):
    cfg = write(tmp_path, 'scenario = "fig1c"\n')
    assert cli.main(["run", "--scenario", "fig3c", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_invalid_worker_env_exit_2(tmp_path, monkeypatch):
    monkeypatch.setenv("SQFOCK_WORKERS", "zero")
    cfg = write(tmp_path, 'scenario = "sweep"\n[[sweep.axis]]\nvariable = "r"\nmin = 0\nmax = 1\npoints = 2\n')
    assert cli.main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_worker_env_does_not_change_results(tmp_path, monkeypatch):
    cfg = write(tmp_path, 'scenario = "sweep"\n[[sweep.axis]]\nvariable = "r"\nmin = 0\nmax = 2\npoints = 5\n')
    texts = []
    for workers in ("1", "2"):
        monkeypatch.setenv("SQFOCK_WORKERS", workers)
        out = tmp_path / workers
        assert cli.main(["run", "--config", cfg, "--out", str(out)]) == 0
        texts.append((out / "sweep.csv").read_text())
    assert texts[0] == texts[1]


def test_nonconvergence_exit_3(tmp_path, monkeypatch, capsys):
    def boom(name, cfg):
        raise NonconvergentIntegration("step halving exhausted")

    monkeypatch.setattr(scenarios, "run", boom)
    assert cli.main(["run", "--scenario", "fig1c", "--out", str(tmp_path)]) == 3
    assert "step halving" in capsys.readouterr().err


def test_truncation_exit_4(tmp_path):
    cfg = write(tmp_path, 'scenario = "fig2"\n[protocol]\npoints = 11\ndim_squeezed = 6\n'
                          'dim_fock = 20\nwigner_points = 5\n')
    assert cli.main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 4
    assert not (tmp_path / "o").exists()


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "sqfock.cli", "validate", "--config", str(tmp_path / "x.toml")],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    proc = subprocess.run([sys.executable, "-m", "sqfock.cli", "list-scenarios"], capture_output=True, text=True)
    assert proc.returncode == 0 and "fig2" in proc.stdout


CONFIGS = sorted((Path(__file__).parent.parent / "configs").glob("*.toml"))


@pytest.mark.parametrize("path", CONFIGS, ids=[p.stem for p in CONFIGS])
def test_shipped_configs_validate(path, capsys):
    assert cli.main(["validate", "--config", str(path)]) == 0
    assert f"valid {path.stem} config" in capsys.readouterr().out
