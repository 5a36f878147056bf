"""
Well-mixed agent-based simulator.

## Quick Reference

    >>> params = SwarmParams(n_agents=30, r_int=1.0, mode_switch=FixedModes(5))
    >>> result = run(RunConfig(params, seed=7))
    >>> result.productivity_per_agent
    >>> sweep(RunConfig(params), r_int_values=[0.1, 1, 10],
    ...       fractions=[0.1, 0.5], seeds=range(10), workers=4)

Time advances on a dt lattice. Every tau_int seconds one uniformly chosen pair
meets. Within a step the order is fixed: loss, PL_DAGGER completion,
interactions, mode-switch decisions, bookkeeping. Steps where nothing can
happen are skipped in one jump.

Each agent draws from its own generator spawned from (seed, agent id); the
pair scheduler has a separate one. The per-agent routines at the bottom of
this module are shared with the spatial simulator, so a robot that never sees
anyone behaves exactly like a lone agent here.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Deque, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .core import (
    MODE_ORDER, AgentMode, CollaborativeSwitching, Collaboration, CorrectionResult,
    DisorientationParams, FixedModes, InteractionEvent, SwarmParams,
    apply_correction, disorientation, is_effective_pair, is_lost, lost_error_threshold,
    transition,
)
from .errors import ConfigError
from .meanfield import adaptive_mode_switch_rate

logger = logging.getLogger(__name__)


AGENT_STREAM = 1
SCHEDULER_STREAM = 2
MAX_SWITCH_PROBABILITY = 0.1
DEFAULT_TAU_LOST = 3.46
DEFAULT_DRIFT_SIGMA = 0.25
OCCUPANCY_COLUMNS = ["t", "n_notlost", "n_lost", "n_pldagger", "n_pl"]
SWEEP_COLUMNS = ["seed", "regime", "r_int", "initial_fraction", "collaboration", "productivity"]

_MODE_CODES = {mode: code for code, mode in enumerate(MODE_ORDER)}


# =============================================================================
# CONFIGURATION
# =============================================================================

@dataclass(frozen=True)
class DeterministicLoss:
    """A dead reckoner becomes lost once tau_lost has passed since its last reset."""
    tau_lost: float = DEFAULT_TAU_LOST
    kind: str = field(default="deterministic", init=False)

    def __post_init__(self):
        if not self.tau_lost > 0:
            raise ConfigError("tau_lost must be > 0", field="tau_lost")


@dataclass(frozen=True)
class ExponentialLoss:
    """Loss with constant hazard r_lost, as in the mean-field model."""
    r_lost: float = 0.04
    kind: str = field(default="exponential", init=False)

    def __post_init__(self):
        if not self.r_lost > 0:
            raise ConfigError("r_lost must be > 0", field="r_lost")


@dataclass(frozen=True)
class DriftLoss:
    """Planar Wiener drift with scale sigma (m/sqrt(s)); lost when gamma exceeds the threshold."""
    sigma: float = DEFAULT_DRIFT_SIGMA
    kind: str = field(default="drift", init=False)

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError("sigma must be >= 0", field="sigma")


LossModel = Union[DeterministicLoss, ExponentialLoss, DriftLoss]


@dataclass(frozen=True)
class RunConfig:
    """
    One well-mixed run.

    tau_int defaults to 1/r_int (no interactions when r_int is 0).
    tau_total defaults to params.horizon, tau_window to 2 * tau_p and
    r_ms_max to 0.1 / dt. Empty initial_modes puts the first N_PL agents in PL.
    """
    params: SwarmParams
    loss: LossModel = field(default_factory=DeterministicLoss)
    tau_int: Optional[float] = None
    collaboration: Collaboration = Collaboration.BASIC
    initial_modes: Tuple[AgentMode, ...] = ()
    seed: int = 0
    tau_total: Optional[float] = None
    tau_window: Optional[float] = None
    r_ms_max: Optional[float] = None
    record_stride: int = 1
    record_modes: bool = False
    log_interactions: bool = True

    def __post_init__(self):
        n = self.params.n_agents
        if self.initial_modes and len(self.initial_modes) != n:
            raise ConfigError(f"initial_modes has {len(self.initial_modes)} entries for "
                              f"{n} agents", field="initial_modes")
        if self.tau_int is not None and not self.tau_int > 0:
            raise ConfigError("tau_int must be > 0", field="tau_int")
        if self.tau_total is not None and self.tau_total < self.params.dt:
            raise ConfigError("tau_total must be >= dt", field="tau_total")
        if self.tau_window is not None and not self.tau_window > 0:
            raise ConfigError("tau_window must be > 0", field="tau_window")
        if self.record_stride < 1:
            raise ConfigError("record_stride must be >= 1", field="record_stride")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0", field="seed")

    @property
    def tau_lost(self) -> Optional[float]:
        return self.loss.tau_lost if isinstance(self.loss, DeterministicLoss) else None

    @property
    def interaction_period(self) -> Optional[float]:
        if self.tau_int is not None:
            return self.tau_int
        if self.params.r_int > 0:
            return 1.0 / self.params.r_int
        return None

    @property
    def total_time(self) -> float:
        return self.tau_total if self.tau_total is not None else self.params.horizon

    @property
    def window(self) -> float:
        return self.tau_window if self.tau_window is not None else 2.0 * self.params.tau_p

    @property
    def switch_rate_cap(self) -> float:
        return self.r_ms_max if self.r_ms_max is not None else MAX_SWITCH_PROBABILITY / self.params.dt

    @property
    def regime(self) -> str:
        return self.params.mode_switch.kind

    def resolved_initial_modes(self) -> Tuple[AgentMode, ...]:
        if self.initial_modes:
            return tuple(self.initial_modes)
        return fixed_initial_modes(self.params.n_agents, self.params.n_pl)

    def with_changes(self, **changes) -> "RunConfig":
        return replace(self, **changes)


def fixed_initial_modes(n_agents: int, n_pl: int) -> Tuple[AgentMode, ...]:
    """First n_pl agents PL, the rest productive dead reckoners."""
    return tuple(AgentMode.PL if i < n_pl else AgentMode.DR_NOTLOST for i in range(n_agents))


# =============================================================================
# AGENTS
# =============================================================================

def agent_rng(seed: int, agent_id: int) -> np.random.Generator:
    """Per-agent stream; independent of N and of every other agent."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(AGENT_STREAM, agent_id)))


def scheduler_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(SCHEDULER_STREAM,)))


@dataclass
class Agent:
    """
    Mutable per-agent state. Timers are kept as the step index of the last
    reset and of the PL_DAGGER entry, so skipped steps need no updates.
    """
    id: int
    mode: AgentMode
    rng: np.random.Generator = field(repr=False)
    disorientation: DisorientationParams = field(default_factory=DisorientationParams)
    error_magnitude: float = 0.0
    reset_step: int = 0
    dagger_step: int = 0
    loss_step: Optional[int] = None
    offset: np.ndarray = field(default_factory=lambda: np.zeros(2))
    interaction_window: Deque[float] = field(default_factory=deque, repr=False)
    productive_since: Optional[int] = None
    productive_steps: int = 0

    def lost_timer(self, step: int, dt: float) -> float:
        return (step - self.reset_step) * dt

    def pl_dagger_timer(self, step: int, dt: float) -> float:
        if self.mode is not AgentMode.PL_DAGGER:
            return 0.0
        return (step - self.dagger_step) * dt

    @property
    def gamma(self) -> float:
        return disorientation(self.error_magnitude, self.disorientation)


class Population:
    """
    Agents plus the occupancy counts and productivity ledger that every
    mode change has to keep in sync.
    """

    def __init__(self, agents: List[Agent]):
        self.agents = agents
        self.counts = [0, 0, 0, 0]
        for agent in agents:
            self.counts[agent.mode.index] += 1
            if agent.mode is AgentMode.DR_NOTLOST:
                agent.productive_since = 1

    def __len__(self) -> int:
        return len(self.agents)

    def set_mode(self, agent: Agent, mode: AgentMode, step: int) -> None:
        old = agent.mode
        if old is mode:
            return
        transition(old, mode)
        self.counts[old.index] -= 1
        self.counts[mode.index] += 1
        if old is AgentMode.DR_NOTLOST:
            agent.productive_steps += step - agent.productive_since
            agent.productive_since = None
        if mode is AgentMode.DR_NOTLOST:
            agent.productive_since = step
        agent.mode = mode

    def close(self, n_steps: int) -> List[int]:
        """Productive step counts per agent over steps 1..n_steps."""
        totals = []
        for agent in self.agents:
            total = agent.productive_steps
            if agent.productive_since is not None:
                total += n_steps + 1 - agent.productive_since
            totals.append(total)
        return totals

    def mode_codes(self) -> np.ndarray:
        return np.fromiter((_MODE_CODES[a.mode] for a in self.agents), dtype=np.int8,
                           count=len(self.agents))


# =============================================================================
# RESULTS
# =============================================================================

@dataclass
class RunResult:
    """Outcome of one run. occupancy_series rows follow times; mode_series is (rows, N)."""
    productivity_per_agent: float
    per_agent_productivity: List[float]
    times: np.ndarray
    occupancy_series: np.ndarray
    interaction_log: List[InteractionEvent]
    mode_series: Optional[np.ndarray]
    seed: int
    dt: float
    n_steps: int
    regime: str
    collaboration: str
    r_int: float
    n_agents: int
    n_interactions: int = 0
    agent_ids: Optional[List[int]] = None

    def _column(self, agent_id: int) -> int:
        return self.agent_ids.index(agent_id) if self.agent_ids is not None else agent_id

    def occupancy_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.occupancy_series, columns=OCCUPANCY_COLUMNS[1:])
        frame.insert(0, "t", self.times)
        return frame

    def mode_frame(self) -> pd.DataFrame:
        """Long format (t, robot_id, mode); requires record_modes."""
        if self.mode_series is None:
            return pd.DataFrame(columns=["t", "robot_id", "mode"])
        rows, n = self.mode_series.shape
        labels = np.array([mode.value for mode in MODE_ORDER])
        return pd.DataFrame({
            "t": np.repeat(self.times, n),
            "robot_id": np.tile(np.asarray(self.agent_ids if self.agent_ids is not None
                                           else np.arange(n)), rows),
            "mode": labels[self.mode_series.reshape(-1)],
        })

    def mode_series_of(self, agent_id: int) -> List[AgentMode]:
        if self.mode_series is None:
            raise ConfigError("run was not configured with record_modes", field="record_modes")
        return [MODE_ORDER[code] for code in self.mode_series[:, self._column(agent_id)]]


class Recorder:
    """Fills occupancy and mode rows for a span of steps with the current state."""

    def __init__(self, n_steps: int, n_agents: int, dt: float, stride: int, record_modes: bool,
                 t0: float = 0.0):
        self.stride = stride
        self.steps = np.arange(0, n_steps + 1, stride)
        self.times = t0 + self.steps * dt
        self.occupancy = np.zeros((len(self.steps), 4), dtype=np.int64)
        self.modes = np.zeros((len(self.steps), n_agents), dtype=np.int8) if record_modes else None

    def fill(self, population: Population, first_step: int, last_step: int) -> None:
        start = -(-first_step // self.stride)
        stop = last_step // self.stride + 1
        if start >= stop:
            return
        self.occupancy[start:stop] = population.counts
        if self.modes is not None:
            self.modes[start:stop] = population.mode_codes()


# =============================================================================
# WORLD
# =============================================================================

class World:
    """Full state of one well-mixed run."""

    def __init__(self, config: RunConfig):
        params = config.params
        self.config = config
        self.params = params
        self.dt = params.dt
        self.n_steps = max(1, int(round(config.total_time / self.dt)))
        self.regime = config.regime
        self.collaboration = config.collaboration
        self.log_interactions = config.log_interactions
        self.step_index = 0
        self.scheduler = scheduler_rng(config.seed)

        modes = config.resolved_initial_modes()
        agents = [Agent(i, mode, agent_rng(config.seed, i), params.disorientation)
                  for i, mode in enumerate(modes)]
        self.population = Population(agents)

        loss = config.loss
        self.loss = loss
        self.loss_steps = 0
        self.loss_probability = 0.0
        if isinstance(loss, DeterministicLoss):
            self.loss_steps = int(math.floor(loss.tau_lost / self.dt + 1e-9)) + 1
            self.drift_speed = lost_error_threshold(params.disorientation) / loss.tau_lost
        elif isinstance(loss, ExponentialLoss):
            self.loss_probability = -math.expm1(-loss.r_lost * self.dt)
        self.dagger_steps = max(1, int(round(params.tau_p / self.dt)))

        period = config.interaction_period
        self.interacting = (period is not None and len(agents) >= 2
                            and self.regime != "individual")
        self.tau_int = period
        self.epoch_index = 1
        self.next_epoch_step = self._epoch_step(1) if self.interacting else None

        self.switcher = SwitchPolicy.from_config(config)
        self.events: List[InteractionEvent] = []
        self.n_interactions = 0
        self.recorder = Recorder(self.n_steps, len(agents), self.dt, config.record_stride,
                                 config.record_modes)

        individual = self.regime == "individual"
        for agent in agents:
            if agent.mode is AgentMode.PL and individual:
                self.population.set_mode(agent, AgentMode.DR_NOTLOST, 1)
            if agent.mode is AgentMode.DR_NOTLOST:
                self._schedule_loss(agent, 0)
            elif agent.mode is AgentMode.DR_LOST:
                agent.error_magnitude = float(np.nextafter(
                    lost_error_threshold(agent.disorientation), np.inf))
                if individual:
                    enter_dagger(self.population, agent, 0)
        self.recorder.fill(self.population, 0, 0)

    @property
    def agents(self) -> List[Agent]:
        return self.population.agents

    @property
    def now(self) -> float:
        return self.time_at(self.step_index)

    def time_at(self, step: int) -> float:
        return step * self.dt

    def _epoch_step(self, index: int) -> int:
        return max(1, int(round(index * self.tau_int / self.dt)))

    # -- loss bookkeeping ---------------------------------------------------

    def _schedule_loss(self, agent: Agent, step: int) -> None:
        if isinstance(self.loss, DeterministicLoss):
            agent.loss_step = step + self.loss_steps
        elif isinstance(self.loss, ExponentialLoss):
            agent.loss_step = step + int(agent.rng.geometric(self.loss_probability))
        else:
            agent.loss_step = None

    def _lost_error(self, agent: Agent, step: int) -> float:
        if isinstance(self.loss, DeterministicLoss):
            return self.drift_speed * agent.lost_timer(step, self.dt)
        if isinstance(self.loss, ExponentialLoss):
            return float(np.nextafter(lost_error_threshold(agent.disorientation), np.inf))
        return agent.error_magnitude

    def reset(self, agent: Agent, step: int, was_lost: bool) -> None:
        """Zero the error after a correction or a return to dead reckoning."""
        agent.error_magnitude = 0.0
        agent.offset[:] = 0.0
        agent.reset_step = step
        if isinstance(self.loss, ExponentialLoss) and not was_lost and agent.loss_step is not None:
            return
        self._schedule_loss(agent, step)

    # -- scheduling -----------------------------------------------------------

    def next_active_step(self) -> int:
        """Smallest step after the current one at which anything can happen."""
        upcoming = self.step_index + 1
        if isinstance(self.loss, DriftLoss):
            return upcoming
        candidates = [self.n_steps]
        if self.next_epoch_step is not None:
            candidates.append(self.next_epoch_step)
        for agent in self.agents:
            if agent.mode is AgentMode.DR_NOTLOST and agent.loss_step is not None:
                candidates.append(agent.loss_step)
            elif agent.mode is AgentMode.PL_DAGGER:
                candidates.append(agent.dagger_step + self.dagger_steps)
            elif self.switcher.active and agent.mode in SWITCHABLE:
                candidates.append(max(upcoming, self.switcher.warmup_step))
        return max(upcoming, min(candidates))

    def skip_to(self, step: int) -> None:
        """Advance through quiet steps, recording the unchanged state."""
        if step <= self.step_index:
            return
        self.recorder.fill(self.population, self.step_index + 1, step)
        self.step_index = step

    def result(self) -> RunResult:
        totals = self.population.close(self.n_steps)
        n = len(self.agents)
        per_agent = [count / self.n_steps for count in totals]
        return RunResult(
            productivity_per_agent=sum(totals) / (n * self.n_steps),
            per_agent_productivity=per_agent,
            times=self.recorder.times,
            occupancy_series=self.recorder.occupancy,
            interaction_log=self.events,
            mode_series=self.recorder.modes,
            seed=self.config.seed,
            dt=self.dt,
            n_steps=self.n_steps,
            regime=self.regime,
            collaboration=self.config.collaboration.value,
            r_int=self.params.r_int,
            n_agents=n,
            n_interactions=self.n_interactions,
        )


SWITCHABLE = (AgentMode.DR_LOST, AgentMode.PL)


@dataclass(frozen=True)
class SwitchPolicy:
    """
    How r_MS is obtained in the collaborative regime.

    rate set: constant (or alpha / r_int). rate None: local estimate alpha / r_hat,
    only after warmup_step.
    """
    active: bool
    rate: Optional[float]
    alpha: float
    cap: float
    window: float
    warmup_step: int
    dt: float

    @classmethod
    def from_config(cls, config: RunConfig) -> "SwitchPolicy":
        params = config.params
        cap = config.switch_rate_cap
        window = config.window
        mode = params.mode_switch
        if not isinstance(mode, CollaborativeSwitching):
            return cls(False, None, 1.0, cap, window, 0, params.dt)
        alpha = mode.alpha if mode.alpha is not None else 1.0
        if mode.r_ms is not None:
            return cls(True, min(mode.r_ms, cap), alpha, cap, window, 0, params.dt)
        if mode.local_estimate:
            warmup = int(math.ceil(window / params.dt - 1e-9))
            return cls(True, None, alpha, cap, window, warmup, params.dt)
        rate = adaptive_mode_switch_rate(params.r_int, alpha, cap)
        return cls(True, min(rate, cap), alpha, cap, window, 0, params.dt)

    def decide(self, agent: Agent, step: int) -> Optional[AgentMode]:
        if step < self.warmup_step:
            return None
        now = step * self.dt
        if self.rate is not None:
            return switch_with_rate(agent, self.rate, self.dt)
        r_hat = estimate_interaction_rate(agent, now, self.window)
        return mode_switch_decision(agent, r_hat, self.dt, self.cap, self.alpha)


# =============================================================================
# OPERATIONS
# =============================================================================

@dataclass(frozen=True)
class InteractionOutcome:
    """Result of a meeting; corrections[0] applies to a, corrections[1] to b."""
    effective: bool
    corrections: Tuple[CorrectionResult, CorrectionResult]

    @property
    def any_applied(self) -> bool:
        return self.corrections[0].applied or self.corrections[1].applied


def interact(a: Agent, b: Agent, collaboration: Collaboration) -> InteractionOutcome:
    """
    Decide what a meeting between a and b does, without mutating either.

    Raises:
        ConfigError: If a and b are the same agent
    """
    if a.id == b.id:
        raise ConfigError("an agent cannot interact with itself", field="id")
    smart = collaboration is Collaboration.SMART
    a_result = apply_correction(a.mode, a.error_magnitude, b.mode, smart=smart)
    b_result = apply_correction(b.mode, b.error_magnitude, a.mode, smart=smart)
    return InteractionOutcome(is_effective_pair(a.mode, b.mode), (a_result, b_result))


def estimate_interaction_rate(agent: Agent, now: float, tau_window: float) -> float:
    """
    Effective interactions in (now - tau_window, now] divided by tau_window.
    Expired timestamps are dropped from the agent's window.
    """
    if not tau_window > 0:
        raise ConfigError("tau_window must be > 0", field="tau_window")
    window = agent.interaction_window
    horizon = now - tau_window + 1e-9
    while window and window[0] <= horizon:
        window.popleft()
    return len(window) / tau_window


def record_effective(agent: Agent, now: float, tau_window: float) -> None:
    window = agent.interaction_window
    window.append(now)
    horizon = now - tau_window + 1e-9
    while window and window[0] <= horizon:
        window.popleft()


def mode_switch_probability(r_ms: float, dt: float) -> float:
    return min(-math.expm1(-r_ms * dt), MAX_SWITCH_PROBABILITY)


def local_mode_switch_rate(r_hat: float, alpha: float, r_ms_max: float) -> float:
    """alpha / r_hat, capped; an agent with an empty memory switches at the cap."""
    if r_hat <= 0:
        return r_ms_max
    return min(alpha / r_hat, r_ms_max)


def switch_with_rate(agent: Agent, r_ms: float, dt: float) -> Optional[AgentMode]:
    """One Bernoulli draw from the agent's stream; None when no switch happens."""
    if agent.mode not in SWITCHABLE:
        return None
    if agent.rng.random() >= mode_switch_probability(r_ms, dt):
        return None
    if agent.mode is AgentMode.DR_LOST:
        return AgentMode.PL_DAGGER
    return AgentMode.DR_NOTLOST


def mode_switch_decision(agent: Agent, r_hat: float, dt: float, r_ms_max: float,
                         alpha: float = 1.0) -> Optional[AgentMode]:
    """
    Switch decision with r_MS = min(alpha / r_hat, r_ms_max).

    Returns:
        PL_DAGGER for a lost dead reckoner, DR_NOTLOST for a PL, or None.
        Agents in other modes never switch and consume no random draw.
    """
    return switch_with_rate(agent, local_mode_switch_rate(r_hat, alpha, r_ms_max), dt)


def update_drift(agent: Agent, sigma: float, dt: float) -> None:
    """
    Draw this step's planar drift increment. Only dead reckoners accumulate
    it; localizers hold a zero offset. The draw happens for every agent.
    """
    increment = agent.rng.standard_normal(2) * (sigma * math.sqrt(dt))
    if agent.mode.is_dead_reckoner:
        agent.offset += increment
        agent.error_magnitude = float(math.hypot(agent.offset[0], agent.offset[1]))
    else:
        agent.offset[:] = 0.0
        agent.error_magnitude = 0.0


def check_drift_loss(population: Population, agent: Agent, step: int) -> bool:
    """DR_NOTLOST -> DR_LOST when gamma exceeds the threshold. Lost is sticky."""
    if agent.mode is AgentMode.DR_NOTLOST and is_lost(agent.gamma, agent.disorientation):
        population.set_mode(agent, AgentMode.DR_LOST, step)
        return True
    return False


def enter_dagger(population: Population, agent: Agent, step: int) -> None:
    population.set_mode(agent, AgentMode.PL_DAGGER, step)
    agent.dagger_step = step
    agent.error_magnitude = 0.0
    agent.offset[:] = 0.0


def finish_relocalization(world, k: int, individual: bool) -> None:
    """PL_DAGGER -> PL after tau_p; individual switchers go straight back to DR."""
    population = world.population
    for agent in world.agents:
        if agent.mode is AgentMode.PL_DAGGER and k - agent.dagger_step >= world.dagger_steps:
            population.set_mode(agent, AgentMode.PL, k)
            if individual:
                population.set_mode(agent, AgentMode.DR_NOTLOST, k)
                world.reset(agent, k, was_lost=True)


def switch_modes(world, k: int) -> None:
    """One decision per lost dead reckoner and per PL, in id order."""
    if not world.switcher.active:
        return
    population = world.population
    for agent in world.agents:
        if agent.mode not in SWITCHABLE:
            continue
        target = world.switcher.decide(agent, k)
        if target is AgentMode.PL_DAGGER:
            enter_dagger(population, agent, k)
        elif target is AgentMode.DR_NOTLOST:
            population.set_mode(agent, target, k)
            world.reset(agent, k, was_lost=True)


def meet(world, a: Agent, b: Agent, k: int) -> InteractionOutcome:
    """
    Apply an interaction to both agents and log it.

    Interaction memories run on elapsed time (k * dt), the clock SwitchPolicy
    reads them with; logged events carry the world's own time at step k.
    """
    outcome = interact(a, b, world.collaboration)
    elapsed = k * world.dt
    world.n_interactions += 1
    for agent, result in zip((a, b), outcome.corrections):
        if not result.applied:
            continue
        was_lost = agent.mode is AgentMode.DR_LOST
        world.population.set_mode(agent, result.mode, k)
        world.reset(agent, k, was_lost=was_lost)
    if outcome.effective:
        record_effective(a, elapsed, world.switcher.window)
        record_effective(b, elapsed, world.switcher.window)
    if world.log_interactions:
        world.events.append(InteractionEvent.between(world.time_at(k), a.id, b.id,
                                                     outcome.effective))
    return outcome


def step(world: World) -> World:
    """Advance the world by one dt."""
    world.step_index += 1
    k = world.step_index
    population = world.population
    individual = world.regime == "individual"

    for agent in world.agents:
        if isinstance(world.loss, DriftLoss):
            update_drift(agent, world.loss.sigma, world.dt)
            became_lost = check_drift_loss(population, agent, k)
        elif agent.mode is AgentMode.DR_NOTLOST and agent.loss_step is not None \
                and k >= agent.loss_step:
            population.set_mode(agent, AgentMode.DR_LOST, k)
            agent.error_magnitude = world._lost_error(agent, k)
            became_lost = True
        else:
            became_lost = False
        if individual and became_lost:
            enter_dagger(population, agent, k)

    finish_relocalization(world, k, individual)

    while world.next_epoch_step is not None and world.next_epoch_step <= k:
        i, j = world.scheduler.choice(len(world.agents), size=2, replace=False)
        meet(world, world.agents[int(i)], world.agents[int(j)], k)
        world.epoch_index += 1
        world.next_epoch_step = world._epoch_step(world.epoch_index)

    switch_modes(world, k)
    world.recorder.fill(population, k, k)
    return world


def run(config: RunConfig) -> RunResult:
    """Simulate one run to tau_total. Deterministic given config.seed."""
    world = World(config)
    logger.debug("wellmixed run seed=%d regime=%s N=%d steps=%d", config.seed, world.regime,
                 len(world.agents), world.n_steps)
    while world.step_index < world.n_steps:
        target = world.next_active_step()
        world.skip_to(min(target, world.n_steps) - 1)
        step(world)
    result = world.result()
    logger.debug("wellmixed run seed=%d productivity=%.6f interactions=%d", config.seed,
                 result.productivity_per_agent, result.n_interactions)
    return result


# =============================================================================
# SWEEPS
# =============================================================================

def cell_config(base: RunConfig, r_int: float, fraction: float, seed: int) -> RunConfig:
    """Configuration of one (r_int, initial PL fraction) cell."""
    params = base.params
    n_pl = int(round(fraction * params.n_agents))
    mode_switch = params.mode_switch
    if isinstance(mode_switch, FixedModes):
        mode_switch = FixedModes(n_pl)
    cell_params = params.with_changes(r_int=r_int, mode_switch=mode_switch)
    return base.with_changes(
        params=cell_params,
        tau_int=None,
        initial_modes=fixed_initial_modes(params.n_agents, n_pl),
        seed=int(seed),
        log_interactions=False,
        record_modes=False,
    )


def _summary_row(config: RunConfig) -> Dict[str, object]:
    result = run(config)
    n_pl = sum(1 for mode in config.resolved_initial_modes() if mode is AgentMode.PL)
    return {
        "seed": config.seed,
        "regime": result.regime,
        "r_int": config.params.r_int,
        "initial_fraction": n_pl / config.params.n_agents,
        "collaboration": result.collaboration,
        "productivity": result.productivity_per_agent,
    }


def run_many(configs: Sequence[RunConfig], workers: int = 1) -> pd.DataFrame:
    """Run every config, in input order, optionally across worker processes."""
    configs = list(configs)
    if workers > 1 and len(configs) > 1:
        chunk = max(1, len(configs) // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_summary_row, configs, chunksize=chunk))
    else:
        rows = [_summary_row(config) for config in configs]
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def sweep(base: RunConfig, r_int_values: Iterable[float], fractions: Iterable[float],
          seeds: Iterable[int], workers: int = 1) -> pd.DataFrame:
    """
    One summary row per (r_int, fraction, seed) run.

    Rows come out in grid order whatever the worker count, so parallel and
    serial sweeps produce identical tables.
    """
    seeds = [int(s) for s in seeds]
    configs = [cell_config(base, float(r_int), float(fraction), seed)
               for r_int in r_int_values for fraction in fractions for seed in seeds]
    logger.debug("sweep: %d runs on %d workers", len(configs), workers)
    return run_many(configs, workers)


def summarize(results: Iterable[RunResult]) -> pd.DataFrame:
    rows = [{
        "seed": r.seed,
        "regime": r.regime,
        "collaboration": r.collaboration,
        "r_int": r.r_int,
        "n_agents": r.n_agents,
        "productivity": r.productivity_per_agent,
        "n_interactions": r.n_interactions,
    } for r in results]
    return pd.DataFrame(rows, columns=["seed", "regime", "collaboration", "r_int", "n_agents",
                                       "productivity", "n_interactions"])
