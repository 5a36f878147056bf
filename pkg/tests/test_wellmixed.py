import os
from collections import deque

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st

from swarm_sacrifice.core import (
    AgentMode, Collaboration, CollaborativeSwitching, FixedModes, IndividualSwitching, SwarmParams,
)
from swarm_sacrifice.errors import ConfigError
from swarm_sacrifice.meanfield import fixed_productivity
from swarm_sacrifice.wellmixed import (
    OCCUPANCY_COLUMNS, SWEEP_COLUMNS, Agent, DeterministicLoss, DriftLoss, ExponentialLoss,
    RunConfig, agent_rng, estimate_interaction_rate, fixed_initial_modes, interact,
    mode_switch_decision, mode_switch_probability, record_effective, run, summarize, sweep,
)

CPU_WORKERS = max(1, min(8, os.cpu_count() or 1))


def make_agent(agent_id, mode, error=0.0):
    agent = Agent(agent_id, mode, agent_rng(0, agent_id))
    agent.error_magnitude = error
    return agent


def fixed_config(n=30, n_pl=0, r_int=1.0, **changes):
    params = SwarmParams(n_agents=n, r_int=r_int, mode_switch=FixedModes(n_pl))
    return RunConfig(params, **changes)


# =============================================================================
# Pairwise interaction
# =============================================================================

def test_basic_correction_of_lost_agent():
    outcome = interact(make_agent(0, AgentMode.DR_LOST, 2.0), make_agent(1, AgentMode.PL),
                       Collaboration.BASIC)
    assert outcome.effective
    assert outcome.corrections[0].applied
    assert outcome.corrections[0].mode is AgentMode.DR_NOTLOST
    assert outcome.corrections[0].error_magnitude == 0.0
    assert not outcome.corrections[1].applied


def test_basic_leaves_oriented_agent_alone():
    outcome = interact(make_agent(0, AgentMode.DR_NOTLOST, 0.3), make_agent(1, AgentMode.PL),
                       Collaboration.BASIC)
    assert outcome.effective
    assert not outcome.any_applied


def test_smart_resets_oriented_agent():
    outcome = interact(make_agent(0, AgentMode.PL), make_agent(1, AgentMode.DR_NOTLOST, 0.3),
                       Collaboration.SMART)
    assert outcome.corrections[1].applied
    assert outcome.corrections[1].error_magnitude == 0.0


@pytest.mark.parametrize("collaboration", list(Collaboration))
def test_localizer_pair_is_a_no_op(collaboration):
    outcome = interact(make_agent(0, AgentMode.PL), make_agent(1, AgentMode.PL), collaboration)
    assert not outcome.effective
    assert not outcome.any_applied


def test_agent_cannot_meet_itself():
    agent = make_agent(0, AgentMode.PL)
    with pytest.raises(ConfigError):
        interact(agent, agent, Collaboration.BASIC)


# =============================================================================
# Rate estimation and mode switching
# =============================================================================

def test_empty_window_estimates_zero():
    assert estimate_interaction_rate(make_agent(0, AgentMode.PL), 50.0, 20.0) == 0.0


def test_four_meetings_in_twenty_seconds():
    agent = make_agent(0, AgentMode.PL)
    for t in (31.0, 35.0, 42.0, 50.0):
        record_effective(agent, t, 20.0)
    assert estimate_interaction_rate(agent, 50.0, 20.0) == pytest.approx(0.2)


def test_window_forgets_old_meetings():
    agent = make_agent(0, AgentMode.PL)
    agent.interaction_window = deque([10.0, 30.0, 45.0])
    assert estimate_interaction_rate(agent, 50.0, 20.0) == pytest.approx(0.05)
    assert list(agent.interaction_window) == [45.0]


def test_window_must_be_positive():
    with pytest.raises(ConfigError):
        estimate_interaction_rate(make_agent(0, AgentMode.PL), 1.0, 0.0)


def test_switch_probability_is_capped():
    assert mode_switch_probability(1e9, 0.01) == 0.1
    assert mode_switch_probability(1.0, 0.01) == pytest.approx(1 - np.exp(-0.01))


def test_productive_agent_never_switches_and_draws_nothing():
    agent = make_agent(0, AgentMode.DR_NOTLOST)
    before = agent.rng.bit_generator.state
    assert mode_switch_decision(agent, 0.0, 0.01, 10.0) is None
    assert agent.rng.bit_generator.state == before


def test_empty_memory_switches_at_the_cap():
    switches = 0
    for i in range(2000):
        agent = Agent(i, AgentMode.DR_LOST, agent_rng(1, i))
        if mode_switch_decision(agent, 0.0, 0.01, 10.0) is AgentMode.PL_DAGGER:
            switches += 1
    assert switches / 2000 == pytest.approx(1 - np.exp(-0.1), abs=0.03)


def test_busy_agent_freezes_its_role():
    agent = make_agent(0, AgentMode.PL)
    decisions = [mode_switch_decision(agent, 1e6, 0.01, 10.0) for _ in range(1000)]
    assert all(decision is None for decision in decisions)


# =============================================================================
# Runs
# =============================================================================

def test_no_localizers_everyone_lost_after_tau_lost():
    result = run(fixed_config(tau_total=200))
    frame = result.occupancy_frame()
    late = frame[frame["t"] >= 2 * 3.46]
    assert (late["n_lost"] == 30).all()
    assert result.productivity_per_agent == pytest.approx(346 / 20000)
    assert result.per_agent_productivity == pytest.approx([346 / 20000] * 30)


def test_result_is_deterministic_for_a_seed():
    config = fixed_config(n_pl=6, r_int=2.0, seed=11, collaboration=Collaboration.SMART)
    first, second = run(config), run(config)
    assert first.productivity_per_agent == second.productivity_per_agent
    np.testing.assert_array_equal(first.occupancy_series, second.occupancy_series)
    assert first.interaction_log == second.interaction_log


def test_seeds_change_the_outcome():
    base = fixed_config(n_pl=6, r_int=2.0)
    assert run(base.with_changes(seed=1)).interaction_log != run(base.with_changes(seed=2)).interaction_log


@pytest.mark.parametrize("regime", [
    FixedModes(5), IndividualSwitching(), CollaborativeSwitching(local_estimate=True),
    CollaborativeSwitching(r_ms=0.05),
])
def test_occupancy_always_sums_to_population(regime):
    params = SwarmParams(n_agents=20, r_int=3.0, mode_switch=regime)
    initial = fixed_initial_modes(20, 5)
    result = run(RunConfig(params, initial_modes=initial, tau_total=100, seed=4))
    frame = result.occupancy_frame()
    assert list(frame.columns) == OCCUPANCY_COLUMNS
    assert (frame[OCCUPANCY_COLUMNS[1:]].sum(axis=1) == 20).all()


def test_individual_agent_cycles_between_work_and_relocalization():
    params = SwarmParams(n_agents=1, r_int=0.0, tau_p=10, mode_switch=IndividualSwitching())
    result = run(RunConfig(params, tau_total=2000, record_modes=True))
    seen = set(result.mode_series_of(0))
    assert seen == {AgentMode.DR_NOTLOST, AgentMode.PL_DAGGER}
    assert result.productivity_per_agent == pytest.approx(3.46 / (3.46 + 10), abs=0.01)


def test_isolated_switcher_waits_one_window_before_switching():
    params = SwarmParams(n_agents=1, r_int=0.0, tau_p=10,
                         mode_switch=CollaborativeSwitching(local_estimate=True))
    result = run(RunConfig(params, tau_total=100, record_modes=True, seed=3))
    modes = result.mode_series_of(0)
    dagger_times = [t for t, mode in zip(result.times, modes) if mode is AgentMode.PL_DAGGER]
    assert dagger_times
    assert dagger_times[0] >= 20.0 - 1e-9


def test_drift_loss_eventually_loses_an_isolated_agent():
    params = SwarmParams(n_agents=1, r_int=0.0)
    result = run(RunConfig(params, loss=DriftLoss(0.25), tau_total=60, record_modes=True, seed=2))
    assert AgentMode.DR_LOST in result.mode_series_of(0)


def test_exponential_loss_rate_matches_mean_lifetime():
    params = SwarmParams(n_agents=200, r_int=0.0)
    result = run(RunConfig(params, loss=ExponentialLoss(0.04), tau_total=2000, seed=5))
    # each agent works an Exp(0.04) stretch once: mean 25 s over a 2000 s run
    assert result.productivity_per_agent == pytest.approx(25 / 2000, rel=0.2)


def test_mode_series_requires_recording():
    result = run(fixed_config(tau_total=10))
    with pytest.raises(ConfigError):
        result.mode_series_of(0)
    assert result.mode_frame().empty


def test_run_config_validation():
    with pytest.raises(ConfigError):
        fixed_config(n=3, initial_modes=(AgentMode.PL,))
    with pytest.raises(ConfigError):
        fixed_config(tau_int=0.0)
    with pytest.raises(ConfigError):
        DeterministicLoss(0.0)


@settings(max_examples=10, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=1, max_value=15))
def test_smart_never_loses_to_basic(seed, n_pl):
    basic = fixed_config(n_pl=n_pl, r_int=5.0, tau_total=40, seed=seed)
    smart = basic.with_changes(collaboration=Collaboration.SMART)
    assert run(smart).productivity_per_agent >= run(basic).productivity_per_agent


# =============================================================================
# Sweeps
# =============================================================================

def test_sweep_has_one_row_per_run():
    base = fixed_config(tau_total=20)
    frame = sweep(base, [0.5, 2.0], [0.1, 0.5, 0.9], seeds=range(3))
    assert list(frame.columns) == SWEEP_COLUMNS
    assert len(frame) == 18
    assert sorted(frame["initial_fraction"].unique()) == pytest.approx([0.1, 0.5, 0.9])


def test_empty_sweep_is_an_empty_table():
    frame = sweep(fixed_config(), [], [0.5], seeds=[0])
    assert frame.empty
    assert list(frame.columns) == SWEEP_COLUMNS


def test_parallel_sweep_matches_serial():
    base = fixed_config(tau_total=20)
    serial = sweep(base, [1.0, 4.0], [0.2, 0.6], seeds=range(2), workers=1)
    parallel = sweep(base, [1.0, 4.0], [0.2, 0.6], seeds=range(2), workers=2)
    pd.testing.assert_frame_equal(serial, parallel)


def test_summarize_results():
    results = [run(fixed_config(n_pl=3, tau_total=20, seed=s)) for s in range(2)]
    frame = summarize(results)
    assert list(frame["seed"]) == [0, 1]
    assert (frame["regime"] == "fixed").all()


# =============================================================================
# Acceptance-scale checks
# =============================================================================

@pytest.mark.slow
def test_agent_based_runs_follow_the_mean_field():
    params = SwarmParams(n_agents=30, r_lost=0.04, mode_switch=FixedModes(0))
    base = RunConfig(params, loss=ExponentialLoss(0.04), tau_total=2000)
    r_int_values = [0.1, 0.3, 1.0, 3.0, 10.0]
    fractions = [0.1, 0.3, 0.5, 0.7, 0.9]
    frame = sweep(base, r_int_values, fractions, seeds=range(50), workers=CPU_WORKERS)
    means = frame.groupby(["r_int", "initial_fraction"])["productivity"].mean()
    for (r_int, fraction), measured in means.items():
        predicted = fixed_productivity(fraction, 30, 0.04, r_int)
        assert abs(measured - predicted) <= 0.05, (r_int, fraction, measured, predicted)


@pytest.mark.slow
def test_smart_dominates_basic_over_random_configurations():
    rng = np.random.default_rng(2024)
    wins = 0
    gains = []
    for i in range(100):
        n_pl = int(rng.integers(1, 30))
        r_int = float(10 ** rng.uniform(-1, 1.5))
        basic = fixed_config(n_pl=n_pl, r_int=r_int, seed=i)
        smart = basic.with_changes(collaboration=Collaboration.SMART)
        b, s = run(basic).productivity_per_agent, run(smart).productivity_per_agent
        wins += s >= b
        gains.append(s - b)
    assert wins >= 99
    assert np.mean(gains) > 0


@pytest.mark.slow
@pytest.mark.parametrize("r_int", [0.1, 1.0, 5.0, 20.0, 50.0])
def test_switching_reduces_sensitivity_to_initial_roles(r_int):
    fractions = list(np.linspace(0.05, 0.95, 10))
    seeds = range(3)

    def spread(mode_switch):
        params = SwarmParams(n_agents=30, r_int=r_int, mode_switch=mode_switch)
        frame = sweep(RunConfig(params), [r_int], fractions, seeds, workers=CPU_WORKERS)
        means = frame.groupby("initial_fraction")["productivity"].mean()
        return means.max() - means.min()

    fixed = spread(FixedModes(0))
    collaborative = spread(CollaborativeSwitching(local_estimate=True))
    assert collaborative < fixed
