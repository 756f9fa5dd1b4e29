import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from trapwave.cli import main, read_table
from trapwave.invariants import TRACE_COLUMNS
from trapwave.modes import solve_frequency
from trapwave.params import ParamSet

CONFIGS = Path(__file__).resolve().parent.parent / "demos" / "configs"

SHORT = """\
[scenario]
mode = {mode}
epsilon = 0
horizon = 20.0
record_every = 0.5
initial_amplitude = 1.0
outputs = trace, snapshots
snapshot_every = 10.0

[grid]
points_per_decay = 20
core_decays = 15
sponge_decays = 3

[K]
value = 0.0
[M]
value = 1.0
[T]
value = 1.0
[rho]
value = 1.0
[k]
value = 1.0
[v]
value = {v}
"""


@pytest.fixture
def short_config(tmp_path):
    path = tmp_path / "short.ini"
    path.write_text(SHORT.format(mode="fixed", v=0.0))
    return path


def test_modes_constant_gives_one_row(tmp_path, capsys):
    assert main(["modes", "--config", str(CONFIGS / "example_a.ini"), "--out", str(tmp_path)]) == 0
    cols, data, _ = read_table(tmp_path / "modes.txt")
    assert cols == ("theta", "omega0", "S", "B", "c0")
    assert data.shape == (1, 5)
    m = solve_frequency(ParamSet(K=0, M=1, T=1, rho=1, k=1))
    assert data[0, 1] == m.omega0 and data[0, 4] == m.c0
    assert len(capsys.readouterr().out.splitlines()) == 1


def test_modes_ramp_table(tmp_path):
    assert main(["modes", "--config", str(CONFIGS / "k_ramp.ini"), "--out", str(tmp_path), "--jobs", "2",
                 "--plotdata"]) == 0
    _, data, _ = read_table(tmp_path / "modes.txt")
    assert data.shape == (101, 5)
    assert data[0, 0] == 0.0 and data[-1, 0] == 3.0
    # stiffer foundation raises the frequency
    assert data[-1, 1] > data[0, 1]
    cols, c0, _ = read_table(tmp_path / "modes_c0.dat")
    assert cols == ("theta", "c0") and np.array_equal(c0[:, 1], data[:, 4])


def test_no_trapped_mode_exit_code(capsys):
    assert main(["modes", "--config", str(CONFIGS / "no_mode.ini")]) == 2
    assert "error" in capsys.readouterr().err


def test_usage_errors():
    with pytest.raises(SystemExit) as info:
        main(["verify", "no-such-suite"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["modes"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["modes", "--config", "x.ini", "--jobs", "0"])
    assert info.value.code == 1


def test_config_errors_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text(SHORT.format(mode="fixed", v=0.0).replace("epsilon = 0", "epsilon = soon"))
    assert main(["modes", "--config", str(bad)]) == 1
    assert "line 3" in capsys.readouterr().err
    assert main(["modes", "--config", str(tmp_path / "missing.ini")]) == 1


def test_simulate_needs_out(short_config):
    assert main(["simulate", "--config", str(short_config)]) == 1


def test_simulate_outputs(short_config, tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(short_config), "--out", str(out), "--plotdata"]) == 0
    header = [line for line in (out / "trace.txt").read_text().splitlines() if line.startswith("#")]
    assert header[-1] == "# " + " ".join(TRACE_COLUMNS)
    assert header[0].startswith("# frame=lab dx=")
    cols, data, _ = read_table(out / "trace.txt")
    assert cols == TRACE_COLUMNS and data.shape[1] == len(TRACE_COLUMNS) and len(data) > 10
    assert np.all(np.isfinite(data))
    assert sorted(p.name for p in (out / "snapshots").iterdir()) == ["snap_00000.txt", "snap_00001.txt", "snap_00002.txt"]
    assert (out / "inclusion_U.dat").exists() and (out / "trace_J.dat").exists()


def test_simulate_is_deterministic(short_config, tmp_path):
    for name in ("a", "b"):
        assert main(["simulate", "--config", str(short_config), "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "trace.txt").read_bytes() == (tmp_path / "b" / "trace.txt").read_bytes()
    assert (tmp_path / "a" / "snapshots" / "snap_00001.txt").read_bytes() == \
        (tmp_path / "b" / "snapshots" / "snap_00001.txt").read_bytes()


def test_batch_runs_in_parallel_into_subdirectories(tmp_path):
    fixed = tmp_path / "fixed.ini"
    moving = tmp_path / "moving.ini"
    fixed.write_text(SHORT.format(mode="fixed", v=0.0))
    moving.write_text(SHORT.format(mode="moving", v=0.3))
    out = tmp_path / "batch"
    assert main(["simulate", "--config", str(fixed), "--config", str(moving), "--out", str(out), "--jobs", "2"]) == 0
    assert (out / "fixed" / "trace.txt").exists()
    assert "frame=comoving" in (out / "moving" / "trace.txt").read_text()


def test_unwritable_output_exit_3(short_config, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["simulate", "--config", str(short_config), "--out", str(blocker / "sub")]) == 3


def test_failed_run_writes_marked_partial_output(tmp_path, capsys, monkeypatch):
    import trapwave.cli as cli

    real = cli.run_scenario

    def too_coarse(schedule, grid, *args, **kwargs):
        # stable at v = 0.3, beyond the CFL bound once v has grown to 0.5
        return real(schedule, grid, *args, dt=0.9 * grid.dx / 1.4, **kwargs)

    monkeypatch.setattr(cli, "run_scenario", too_coarse)
    text = SHORT.format(mode="moving", v=0.0).replace("epsilon = 0\nhorizon = 20.0", "epsilon = 0.01\ntheta_max = 1.0")
    text = text.replace("[v]\nvalue = 0.0", "[v]\nkind = linear\nstart = 0.3\nend = 0.5")
    cfg = tmp_path / "ramp.ini"
    cfg.write_text(text)
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 3
    text = (out / "trace.txt").read_text()
    assert text.startswith("# INCOMPLETE:")
    _, data, _ = read_table(out / "trace.txt")
    assert 0 < len(data) and data[-1, 0] < 100.0
    assert "partial output" in capsys.readouterr().err


def test_invariants_command(tmp_path, capsys):
    assert main(["invariants", "--config", str(CONFIGS / "standard_moving.ini"), "--out", str(tmp_path)]) == 0
    cols, data, _ = read_table(tmp_path / "invariants.txt")
    assert cols == TRACE_COLUMNS and len(data) == 101
    j = data[:, cols.index("J_quasi")]
    assert np.ptp(j) <= 1e-12 * abs(j[0])
    assert main(["invariants", "--config", str(CONFIGS / "example_a.ini")]) == 0
    assert capsys.readouterr().out.startswith("# t amplitude")


def test_verify_identities(capsys):
    assert main(["verify", "identities"]) == 0
    out = capsys.readouterr().out
    assert out.strip().splitlines()[-1].endswith("checks passed")
    assert "FAIL" not in out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "trapwave", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "simulate" in r.stdout
