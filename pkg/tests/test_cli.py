import argparse
import json

import pytest

from swarm_sacrifice.config import ExperimentConfig
from swarm_sacrifice.errors import ConfigError
from swarm_sacrifice.export import read_csv
from swarm_sacrifice.main import MEANFIELD_COLUMNS, WORKERS_ENV, main, prepare_config, resolve_workers
from swarm_sacrifice.wellmixed import SWEEP_COLUMNS

WELLMIXED = {
    "layer": "wellmixed",
    "regime": "fixed",
    "runs": 2,
    "params": {"n_agents": 10, "r_int": [0.5, 2.0], "horizon": 20},
    "wellmixed": {"collaboration": ["basic", "smart"], "initial_fraction": [0.2, 0.6]},
}


def write_config(tmp_path, data, name="experiment.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_no_command_prints_help(capsys):
    assert main([]) == 0
    assert "meanfield" in capsys.readouterr().out


def test_meanfield_writes_curves(tmp_path, capsys, no_workers_env):
    config = write_config(tmp_path, {"params": {"r_int": [0.1, 1.0, 10.0]},
                                     "meanfield": {"n_pl": [5, 10]}})
    assert run_cli("meanfield", "-c", config, "-o", tmp_path / "out") == 0
    path = tmp_path / "out" / "meanfield.csv"
    assert path.read_text().startswith("# config: ")
    frame = read_csv(path)
    assert list(frame.columns) == MEANFIELD_COLUMNS
    assert len(frame) == 3 * (2 + 3)
    out = capsys.readouterr().out
    assert "[OK] Wrote 15 rows" in out
    assert "MEAN-FIELD CURVES" in out


def test_wellmixed_outputs_are_byte_identical_across_workers(tmp_path, no_workers_env):
    config = write_config(tmp_path, WELLMIXED)
    for name, workers in (("a", 1), ("b", 2), ("c", 1)):
        assert run_cli("wellmixed", "-c", config, "-o", tmp_path / name, "-w", workers) == 0
    first = (tmp_path / "a" / "wellmixed.csv").read_bytes()
    assert first == (tmp_path / "b" / "wellmixed.csv").read_bytes()
    assert first == (tmp_path / "c" / "wellmixed.csv").read_bytes()
    frame = read_csv(tmp_path / "a" / "wellmixed.csv")
    assert list(frame.columns) == SWEEP_COLUMNS
    assert len(frame) == 2 * 2 * 2 * 2


def test_seed_flag_changes_the_header(tmp_path, no_workers_env):
    config = write_config(tmp_path, WELLMIXED)
    assert run_cli("wellmixed", "-c", config, "-o", tmp_path / "out", "-s", 7) == 0
    assert "# seed: 7" in (tmp_path / "out" / "wellmixed.csv").read_text()


def test_occupancy_series_is_optional(tmp_path, no_workers_env):
    data = dict(WELLMIXED, wellmixed=dict(WELLMIXED["wellmixed"], write_series=True))
    config = write_config(tmp_path, data)
    assert run_cli("wellmixed", "-c", config, "-o", tmp_path / "out") == 0
    series = read_csv(tmp_path / "out" / "occupancy.csv")
    assert (series[["n_notlost", "n_lost", "n_pldagger", "n_pl"]].sum(axis=1) == 10).all()


def test_formation_run_writes_every_table(tmp_path, capsys, no_workers_env):
    config = write_config(tmp_path, {"layer": "spatial", "regime": "collaborative",
                                     "spatial": {"scenario": "formation", "duration": 20}})
    assert run_cli("spatial", "-c", config, "-o", tmp_path / "out") == 0
    for name in ("trajectories.csv", "network.csv", "modes.csv", "productivity.csv"):
        assert (tmp_path / "out" / name).exists(), name
    assert len(read_csv(tmp_path / "out" / "productivity.csv")) == 3
    assert "FORMATION (hub = robot 1)" in capsys.readouterr().out


def test_recorded_trajectories_keep_their_own_clock(tmp_path, no_workers_env):
    rows = ["t,robot_id,phi,z"]
    for k in range(401):
        t = 100.0 + k * 0.05
        rows.append(f"{t:.2f},0,0.0,0.4")
        rows.append(f"{t:.2f},1,0.0,0.6")
    recorded = tmp_path / "recorded.csv"
    recorded.write_text("\n".join(rows) + "\n")
    config = write_config(tmp_path, {"layer": "spatial", "regime": "fixed", "spatial": {
        "scenario": "file", "trajectories": str(recorded), "initial_pl": [0]}})
    assert run_cli("spatial", "-c", config, "-o", tmp_path / "out") == 0

    network = read_csv(tmp_path / "out" / "network.csv")
    assert list(network["count"]) == [20]
    assert network["window_start"].iloc[0] == pytest.approx(100.0)
    productivity = read_csv(tmp_path / "out" / "productivity.csv")
    assert list(productivity.columns) == ["robot_id", "productivity", "effective_rate"]
    assert list(productivity["effective_rate"]) == pytest.approx([1.0, 1.0])
    assert len(read_csv(tmp_path / "out" / "trajectories.csv")) == 802


def test_spatial_sweep_runs_the_coverage_ensemble(tmp_path, no_workers_env):
    config = write_config(tmp_path, {"layer": "spatial", "regime": "individual",
                                     "spatial": {"runs": 2, "n_robots": 3, "duration": 10}})
    assert run_cli("sweep", "-c", config, "-o", tmp_path / "out") == 0
    ensemble = read_csv(tmp_path / "out" / "ensemble.csv")
    assert list(ensemble["regime"]) == ["individual", "individual"]


def test_bad_config_exits_nonzero(tmp_path, capsys, no_workers_env):
    config = write_config(tmp_path, {"params": {"n_agents": 30}, "meanfield": {"n_pl": [40]}})
    assert run_cli("meanfield", "-c", config, "-o", tmp_path / "out") == 1
    assert "[ERROR]" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_missing_trajectory_file_exits_nonzero(tmp_path, no_workers_env):
    config = write_config(tmp_path, {"layer": "spatial", "spatial": {
        "scenario": "file", "trajectories": str(tmp_path / "absent.csv")}})
    assert run_cli("spatial", "-c", config, "-o", tmp_path / "out") == 1


def test_missing_config_file_exits_nonzero(tmp_path):
    assert run_cli("meanfield", "-c", tmp_path / "absent.json") == 1


# =============================================================================
# Worker resolution
# =============================================================================

def test_workers_flag_wins(monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert resolve_workers(5, ExperimentConfig(workers=2)) == 5


def test_workers_from_environment(monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert resolve_workers(None, ExperimentConfig(workers=2)) == 3


def test_workers_from_config(no_workers_env):
    assert resolve_workers(None, ExperimentConfig(workers=2)) == 2


@pytest.mark.parametrize("value", ["many", "0"])
def test_bad_worker_environment(monkeypatch, value):
    monkeypatch.setenv(WORKERS_ENV, value)
    with pytest.raises(ConfigError) as info:
        resolve_workers(None, ExperimentConfig())
    assert info.value.field == WORKERS_ENV


def test_prepare_config_switches_layer(tmp_path, no_workers_env):
    args = argparse.Namespace(config=write_config(tmp_path, {"layer": "meanfield"}),
                              out=None, seed=3, workers=None)
    config = prepare_config(args, "wellmixed")
    assert config.layer == "wellmixed"
    assert config.seed == 3
