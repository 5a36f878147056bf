import json
from pathlib import Path

import pytest

from swarm_sacrifice.config import (
    ExperimentConfig, config_from_dict, expand_grid, find_config_file, load_config,
)
from swarm_sacrifice.core import AgentMode, Collaboration, CollaborativeSwitching, FixedModes
from swarm_sacrifice.errors import ConfigError
from swarm_sacrifice.wellmixed import DeterministicLoss, DriftLoss, ExponentialLoss

ROOT = Path(__file__).resolve().parent.parent


def write(tmp_path, data, name="experiment.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return path


# =============================================================================
# Grids
# =============================================================================

def test_scalar_grid():
    assert expand_grid(2, "x") == (2.0,)


def test_list_grid():
    assert expand_grid([1, 2.5], "x") == (1.0, 2.5)


def test_linear_grid():
    assert expand_grid({"start": 0, "stop": 1, "num": 5}, "x") == pytest.approx(
        (0.0, 0.25, 0.5, 0.75, 1.0))


def test_log_grid():
    values = expand_grid({"start": 0.01, "stop": 100, "num": 5, "scale": "log"}, "x")
    assert values == pytest.approx((0.01, 0.1, 1.0, 10.0, 100.0))


@pytest.mark.parametrize("spec", [
    [],
    {"start": 0, "stop": 1},
    {"start": 0, "stop": 1, "num": 3, "step": 2},
    {"start": 0, "stop": 1, "num": 3, "scale": "log"},
    {"start": 0, "stop": 1, "num": 3, "scale": "cubic"},
    ["a"],
    True,
    "1.0",
])
def test_bad_grids(spec):
    with pytest.raises(ConfigError) as info:
        expand_grid(spec, "params.r_int")
    assert info.value.field == "params.r_int"


# =============================================================================
# Documents
# =============================================================================

def test_empty_document_uses_defaults():
    config = config_from_dict({})
    assert config == ExperimentConfig(source=None)
    assert config.seeds == (0,)
    assert config.r_int_values == (1.0,)


def test_comment_keys_are_ignored():
    config = config_from_dict({"_readme": "x", "params": {"_comment": "y", "n_agents": 12}})
    assert config.params.n_agents == 12


def test_unknown_key_names_its_field():
    with pytest.raises(ConfigError) as info:
        config_from_dict({"params": {"n_agent": 30}})
    assert info.value.field == "params.n_agent"


def test_unknown_top_level_key():
    with pytest.raises(ConfigError) as info:
        config_from_dict({"layers": "meanfield"})
    assert info.value.field == "layers"


@pytest.mark.parametrize("data,field", [
    ({"layer": "quantum"}, "layer"),
    ({"seed": -1}, "seed"),
    ({"runs": 0}, "runs"),
    ({"params": {"tau_p": "ten"}}, "params.tau_p"),
    ({"wellmixed": {"initial_fraction": [1.5]}}, "wellmixed.initial_fraction"),
    ({"wellmixed": {"collaboration": "clever"}}, "wellmixed.collaboration"),
    ({"spatial": {"scenario": "file"}}, "spatial.trajectories"),
    ({"spatial": {"offsets": [0.0], "delta_p0": [1.0, 2.0]}}, "spatial.delta_p0"),
    ({"meanfield": {"n_pl": [2.5]}}, "meanfield.n_pl"),
])
def test_invalid_values_name_their_field(data, field):
    with pytest.raises(ConfigError) as info:
        config_from_dict(data)
    assert info.value.field == field


def test_too_many_localizers_is_rejected_before_running():
    with pytest.raises(ConfigError) as info:
        config_from_dict({"params": {"n_agents": 30}, "meanfield": {"n_pl": [5, 31]}})
    assert info.value.field == "n_pl_initial"
    assert "n_pl=31" in str(info.value)


def test_negative_rate_in_a_grid_is_rejected():
    with pytest.raises(ConfigError) as info:
        config_from_dict({"params": {"r_int": [1.0, -2.0]}})
    assert info.value.field == "r_int"


def test_wellmixed_takes_a_single_loss_rate():
    with pytest.raises(ConfigError):
        config_from_dict({"layer": "wellmixed", "params": {"r_lost": [0.01, 0.02]}})


def test_cells_cover_the_grid():
    config = config_from_dict({"params": {"r_lost": [0.01, 0.02], "r_int": [1, 2, 3]},
                               "meanfield": {"n_pl": [5, 10]}})
    assert len(list(config.cells())) == 12
    wellmixed = config_from_dict({"layer": "wellmixed", "params": {"r_int": [1, 2, 3]}})
    assert [n_pl for _, _, n_pl in wellmixed.cells()] == [0, 0, 0]


def test_mode_switch_per_layer():
    meanfield = config_from_dict({"regime": "collaborative", "meanfield": {"alpha": 0.05}})
    assert meanfield.mode_switch() == CollaborativeSwitching(alpha=0.05)
    wellmixed = config_from_dict({"layer": "wellmixed", "regime": "collaborative"})
    assert wellmixed.mode_switch().local_estimate
    assert config_from_dict({}).mode_switch(7) == FixedModes(7)


@pytest.mark.parametrize("loss,expected", [
    ("deterministic", DeterministicLoss(3.46)),
    ("exponential", ExponentialLoss(0.04)),
    ("drift", DriftLoss(0.25)),
])
def test_loss_models(loss, expected):
    config = config_from_dict({"layer": "wellmixed", "wellmixed": {"loss": loss}})
    assert config.loss_model() == expected


def test_run_config_carries_collaboration():
    config = config_from_dict({"layer": "wellmixed", "seed": 4})
    run_config = config.run_config("smart")
    assert run_config.collaboration is Collaboration.SMART
    assert run_config.seed == 4


def test_spatial_builders():
    config = config_from_dict({"layer": "spatial", "regime": "collaborative",
                               "spatial": {"comm_cut": 50, "tau_p": 10, "initial_pl": [2]}})
    params = config.spatial_params()
    assert params.comm_cut == 50.0
    assert params.window == 20.0
    assert config.initial_modes([1, 2, 3])[2] is AgentMode.PL
    with pytest.raises(ConfigError):
        config.initial_modes([0, 1])


def test_overrides():
    config = config_from_dict({}).with_overrides(seed=9, workers=3, out="elsewhere")
    assert (config.seed, config.workers, config.out) == (9, 3, "elsewhere")
    with pytest.raises(ConfigError):
        config.with_overrides(workers=0)


def test_resolved_config_leaves_out_run_plumbing():
    resolved = config_from_dict({"workers": 4}).resolved()
    assert "workers" not in resolved and "out" not in resolved and "source" not in resolved
    assert resolved["params"]["r_int"] == [1.0]


# =============================================================================
# Files
# =============================================================================

def test_load_config(tmp_path):
    path = write(tmp_path, {"layer": "wellmixed", "runs": 3})
    config = load_config(path)
    assert config.layer == "wellmixed"
    assert config.seeds == (0, 1, 2)
    assert config.source == str(path)


def test_invalid_json_reports_position(tmp_path):
    path = write(tmp_path, '{\n"seed": ,\n}')
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert (info.value.line, info.value.column) == (2, 9)
    assert "line 2, column 9" in str(info.value)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")
    with pytest.raises(ConfigError):
        find_config_file(str(tmp_path / "absent.json"))


def test_find_explicit_config_file(tmp_path):
    path = write(tmp_path, {})
    assert find_config_file(str(path)) == path


def test_sample_experiment_loads():
    config = load_config(ROOT / "experiment.sample.json")
    assert len(config.r_int_values) == 41
    assert config.r_int_values[0] == pytest.approx(0.01)
    assert config.r_int_values[-1] == pytest.approx(100.0)
