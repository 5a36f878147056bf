"""
Spatial simulator on the surface of a vertical cylinder.

## Quick Reference

    >>> geometry = CylinderGeometry(radius=0.3, height=1.0)
    >>> walks = [synth_random_walk(geometry, 300, seed=s, robot_id=s) for s in range(10)]
    >>> result = run_spatial(walks, SpatialParams(regime="collaborative"), seed=1)
    >>> result.productivity, result.network.isolates()

Surface points are (phi, z) with phi in [0, 2*pi) and z in [0, height].
Localization error is measured in the unrolled surface frame (arc length,
height) in meters. Robots interact only while they have line of sight: close
enough, within the angular limit, and with no third robot on the chord.

Trajectories either carry estimated poses (replay) or get synthetic drift
drawn per step from each robot's own stream, the same way the well-mixed
DriftLoss model does it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .core import AgentMode, Collaboration, DisorientationParams, InteractionEvent
from .errors import ConfigError, InputError
from .export import read_csv, write_csv
from .network import InteractionNetwork, build_network
from .wellmixed import (
    DEFAULT_DRIFT_SIGMA, MAX_SWITCH_PROBABILITY, Agent, Population, Recorder, RunResult,
    SwitchPolicy, agent_rng, check_drift_loss, enter_dagger, finish_relocalization, meet,
    switch_modes, update_drift,
)

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
DRIFT_STREAM = 3
REGIMES = ("fixed", "individual", "collaborative")
TRAJECTORY_COLUMNS = ["t", "robot_id", "phi", "z"]
ESTIMATE_COLUMNS = ["est_phi", "est_z"]


# =============================================================================
# GEOMETRY
# =============================================================================

def wrap_angle(phi):
    return np.mod(phi, TWO_PI)


def angle_difference(a, b):
    """Signed b - a folded into [-pi, pi)."""
    return np.mod(np.asarray(b) - np.asarray(a) + math.pi, TWO_PI) - math.pi


def fold(values: np.ndarray, low: float, high: float) -> np.ndarray:
    """Reflect an unbounded path back into [low, high]."""
    span = high - low
    shifted = np.mod(values - low, 2.0 * span)
    return low + span - np.abs(shifted - span)


@dataclass(frozen=True)
class CylinderGeometry:
    radius: float = 0.3
    height: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigError("radius must be > 0", field="radius")
        if not self.height > 0:
            raise ConfigError("height must be > 0", field="height")

    def to_cartesian(self, phi, z) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        z = np.asarray(z, dtype=float)
        return np.stack([self.radius * np.cos(phi), self.radius * np.sin(phi), z], axis=-1)


@dataclass(frozen=True)
class LosParams:
    theta_max: float = math.pi / 2
    d_max: float = 0.5
    eps_occ: float = 0.02

    def __post_init__(self):
        if not 0 < self.theta_max <= math.pi:
            raise ConfigError("theta_max must lie in (0, pi]", field="theta_max")
        if not self.d_max > 0:
            raise ConfigError("d_max must be > 0", field="d_max")
        if self.eps_occ < 0:
            raise ConfigError("eps_occ must be >= 0", field="eps_occ")


def visibility_matrix(phi: np.ndarray, z: np.ndarray, geometry: CylinderGeometry,
                      los: LosParams) -> np.ndarray:
    """
    Pairwise line of sight for robots at (phi[i], z[i]).

    Returns:
        Symmetric boolean (N, N) matrix with a False diagonal
    """
    phi = np.asarray(phi, dtype=float)
    points = geometry.to_cartesian(phi, z)
    n = len(points)
    separation = np.abs(angle_difference(phi[:, None], phi[None, :]))
    chord = points[None, :, :] - points[:, None, :]          # [i, j] = p_j - p_i
    distance = np.linalg.norm(chord, axis=2)
    visible = (separation <= los.theta_max + 1e-12) & (distance <= los.d_max)

    if n > 2:
        length2 = distance ** 2
        # u[i, j, k]: projection of robot k onto the chord i -> j
        dot = np.einsum("ikd,ijd->ijk", chord, chord)
        with np.errstate(divide="ignore", invalid="ignore"):
            u = dot / length2[:, :, None]
        closest = points[:, None, None, :] + u[..., None] * chord[:, :, None, :]
        gap = np.linalg.norm(points[None, None, :, :] - closest, axis=3)
        occluded = (u > 0) & (u < 1) & (gap <= los.eps_occ) & (length2[:, :, None] > 0)
        idx = np.arange(n)
        occluded[idx, :, idx] = False
        occluded[:, idx, idx] = False
        visible &= ~occluded.any(axis=2)

    np.fill_diagonal(visible, False)
    return visible & visible.T


def line_of_sight(a: Tuple[float, float], b: Tuple[float, float],
                  others: Sequence[Tuple[float, float]], geometry: CylinderGeometry,
                  los: LosParams) -> bool:
    """Whether surface points a and b see each other with the given robots around."""
    points = [a, b, *others]
    phi = np.array([p[0] for p in points], dtype=float)
    z = np.array([p[1] for p in points], dtype=float)
    return bool(visibility_matrix(phi, z, geometry, los)[0, 1])


# =============================================================================
# TRAJECTORIES
# =============================================================================

@dataclass
class Trajectory:
    """Array-backed path of one robot; estimated pose columns are optional."""
    robot_id: int
    t: np.ndarray
    phi: np.ndarray
    z: np.ndarray
    est_phi: Optional[np.ndarray] = None
    est_z: Optional[np.ndarray] = None
    delta_p0: Optional[float] = None

    def __post_init__(self):
        self.robot_id = int(self.robot_id)
        self.t = np.asarray(self.t, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        self.z = np.asarray(self.z, dtype=float)
        n = len(self.t)
        if n == 0:
            raise InputError(f"robot {self.robot_id}: empty trajectory")
        if len(self.phi) != n or len(self.z) != n:
            raise InputError(f"robot {self.robot_id}: column lengths differ")
        if (self.est_phi is None) != (self.est_z is None):
            raise InputError(f"robot {self.robot_id}: est_phi and est_z must come together")
        if self.est_phi is not None:
            self.est_phi = np.asarray(self.est_phi, dtype=float)
            self.est_z = np.asarray(self.est_z, dtype=float)
            if len(self.est_phi) != n or len(self.est_z) != n:
                raise InputError(f"robot {self.robot_id}: estimate lengths differ")
        if n > 1 and np.any(np.diff(self.t) <= 0):
            raise InputError(f"robot {self.robot_id}: times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def has_estimate(self) -> bool:
        return self.est_phi is not None

    def with_changes(self, **changes) -> "Trajectory":
        return replace(self, **changes)

    def drift_offsets(self, geometry: CylinderGeometry) -> np.ndarray:
        """(n, 2) estimate minus truth in (arc, z) meters, unwrapped along the path."""
        if not self.has_estimate:
            return np.zeros((len(self.t), 2))
        start = angle_difference(self.phi[0], self.est_phi[0])
        est = np.unwrap(self.est_phi)
        true = np.unwrap(self.phi)
        arc = geometry.radius * (start + (est - est[0]) - (true - true[0]))
        return np.column_stack([arc, self.est_z - self.z])

    def errors(self, geometry: CylinderGeometry) -> np.ndarray:
        return np.linalg.norm(self.drift_offsets(geometry), axis=1)


@dataclass(frozen=True)
class WalkParams:
    """Constant-speed walker whose heading diffuses."""
    speed: float = 0.05
    heading_noise: float = 0.5
    dt: float = 0.05

    def __post_init__(self):
        if self.speed < 0:
            raise ConfigError("speed must be >= 0", field="speed")
        if self.heading_noise < 0:
            raise ConfigError("heading_noise must be >= 0", field="heading_noise")
        if not self.dt > 0:
            raise ConfigError("dt must be > 0", field="dt")


def synth_random_walk(geometry: CylinderGeometry, duration: float,
                      walk: WalkParams = WalkParams(), seed: int = 0,
                      robot_id: int = 0) -> Trajectory:
    """
    Random walk on the surface, one frame per walk.dt. Height reflects at
    the rims and phi wraps around.

    Raises:
        ConfigError: If duration is negative
    """
    if duration < 0:
        raise ConfigError("duration must be >= 0", field="duration")
    rng = np.random.default_rng(seed)
    n = int(math.floor(duration / walk.dt + 1e-9)) + 1
    t = np.arange(n) * walk.dt
    phi0 = rng.uniform(0.0, TWO_PI)
    z0 = rng.uniform(0.1 * geometry.height, 0.9 * geometry.height)
    heading0 = rng.uniform(0.0, TWO_PI)
    turns = rng.standard_normal(n - 1) * (walk.heading_noise * math.sqrt(walk.dt))
    heading = heading0 + np.concatenate([[0.0], np.cumsum(turns)])

    stride = walk.speed * walk.dt
    arc = np.concatenate([[0.0], np.cumsum(stride * np.cos(heading[:-1]))])
    height = z0 + np.concatenate([[0.0], np.cumsum(stride * np.sin(heading[:-1]))])
    phi = wrap_angle(phi0 + arc / geometry.radius)
    z = fold(height, 0.0, geometry.height)
    return Trajectory(robot_id, t, phi, z)


@dataclass(frozen=True)
class DriftParams:
    sigma: float = DEFAULT_DRIFT_SIGMA

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError("sigma must be >= 0", field="sigma")


def drift_offsets(times: np.ndarray, drift: DriftParams, seed: int, robot_id: int = 0,
                  resets: Sequence[float] = ()) -> np.ndarray:
    """
    Accumulated planar Wiener drift sampled at `times`, zeroed at every reset.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(DRIFT_STREAM, robot_id)))
    times = np.asarray(times, dtype=float)
    scale = drift.sigma * np.sqrt(np.diff(times))
    increments = rng.standard_normal((len(times) - 1, 2)) * scale[:, None]
    offsets = np.vstack([np.zeros((1, 2)), np.cumsum(increments, axis=0)])
    for reset in sorted(resets):
        idx = int(np.searchsorted(times, reset - 1e-12))
        if idx < len(times):
            offsets[idx:] -= offsets[idx].copy()
    return offsets


def apply_drift(true: Trajectory, drift: DriftParams, seed: int,
                geometry: CylinderGeometry = CylinderGeometry(),
                resets: Sequence[float] = ()) -> Trajectory:
    """
    Add dead-reckoning estimates to a ground-truth trajectory.

    Args:
        true: Ground truth path
        drift: Wiener scale sigma in m/sqrt(s)
        seed: Root seed; the stream also depends on the robot id
        geometry: Needed to turn arc drift into an angle
        resets: Times at which the estimate snaps back to the truth

    Returns:
        A copy of true with est_phi and est_z filled in
    """
    offsets = drift_offsets(true.t, drift, seed, true.robot_id, resets)
    return with_offsets(true, offsets, geometry)


def with_offsets(true: Trajectory, offsets: np.ndarray, geometry: CylinderGeometry) -> Trajectory:
    est_phi = wrap_angle(true.phi + offsets[:, 0] / geometry.radius)
    est_z = true.z + offsets[:, 1]
    return true.with_changes(est_phi=est_phi, est_z=est_z)


def resample(trajectory: Trajectory, dt: float, t_start: Optional[float] = None,
             t_end: Optional[float] = None) -> Trajectory:
    """Linear interpolation on (unwrapped phi, z) onto t_start + k * dt."""
    if not dt > 0:
        raise ConfigError("dt must be > 0", field="dt")
    start = trajectory.t[0] if t_start is None else t_start
    end = trajectory.t[-1] if t_end is None else t_end
    if end < start:
        raise InputError(f"robot {trajectory.robot_id}: empty resampling window")
    grid = start + np.arange(int(math.floor((end - start) / dt + 1e-9)) + 1) * dt

    def interp_angle(values):
        return wrap_angle(np.interp(grid, trajectory.t, np.unwrap(values)))

    est_phi = est_z = None
    if trajectory.has_estimate:
        est_phi = interp_angle(trajectory.est_phi)
        est_z = np.interp(grid, trajectory.t, trajectory.est_z)
    return Trajectory(trajectory.robot_id, grid, interp_angle(trajectory.phi),
                      np.interp(grid, trajectory.t, trajectory.z), est_phi, est_z,
                      trajectory.delta_p0)


def align(trajectories: Sequence[Trajectory], dt: float) -> List[Trajectory]:
    """Resample every trajectory onto the common grid, sorted by robot id."""
    if not trajectories:
        raise InputError("no trajectories given")
    ids = [t.robot_id for t in trajectories]
    if len(set(ids)) != len(ids):
        raise InputError(f"duplicate robot ids: {sorted(ids)}")
    start = max(t.t[0] for t in trajectories)
    end = min(t.t[-1] for t in trajectories)
    if end < start:
        raise InputError("trajectories do not overlap in time")
    ordered = sorted(trajectories, key=lambda t: t.robot_id)
    return [resample(t, dt, start, end) for t in ordered]


def read_trajectories(path: Union[str, Path]) -> List[Trajectory]:
    """
    Read `t,robot_id,phi,z[,est_phi,est_z]` rows, one trajectory per robot id.

    Raises:
        InputError: Missing file, missing or unknown columns, a non-numeric
            cell, or times that do not increase within a robot (the data row
            is named, counting from 1)
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"trajectory file not found: {path}")
    try:
        frame = read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputError(f"{path}: {e}") from e

    columns = list(frame.columns)
    missing = [c for c in TRAJECTORY_COLUMNS if c not in columns]
    if missing:
        raise InputError(f"{path}: missing columns {missing}")
    has_estimate = "est_phi" in columns or "est_z" in columns
    expected = TRAJECTORY_COLUMNS + (ESTIMATE_COLUMNS if has_estimate else [])
    unknown = [c for c in columns if c not in expected]
    if unknown or (has_estimate and not all(c in columns for c in ESTIMATE_COLUMNS)):
        raise InputError(f"{path}: unexpected columns {columns}")

    numeric = frame[expected].apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna().any(axis=1).to_numpy()
    if bad.any():
        row = int(np.argmax(bad)) + 1
        raise InputError(f"{path}: data row {row} has a missing or non-numeric value")

    trajectories = []
    for robot_id, group in numeric.groupby("robot_id", sort=True):
        times = group["t"].to_numpy()
        steps = np.diff(times)
        if np.any(steps <= 0):
            row = int(group.index[int(np.argmax(steps <= 0)) + 1]) + 1
            raise InputError(f"{path}: data row {row}: time does not increase for robot "
                             f"{int(robot_id)}")
        trajectories.append(Trajectory(
            int(robot_id), times, group["phi"].to_numpy(), group["z"].to_numpy(),
            group["est_phi"].to_numpy() if has_estimate else None,
            group["est_z"].to_numpy() if has_estimate else None,
        ))
    logger.debug("read %d trajectories from %s", len(trajectories), path)
    return trajectories


def trajectories_frame(trajectories: Sequence[Trajectory]) -> pd.DataFrame:
    with_estimate = all(t.has_estimate for t in trajectories)
    parts = []
    for traj in trajectories:
        data = {"t": traj.t, "robot_id": np.full(len(traj), traj.robot_id),
                "phi": traj.phi, "z": traj.z}
        if with_estimate:
            data["est_phi"] = traj.est_phi
            data["est_z"] = traj.est_z
        parts.append(pd.DataFrame(data))
    return pd.concat(parts, ignore_index=True)


def write_trajectories(trajectories: Sequence[Trajectory], path: Union[str, Path],
                       header: Sequence[str] = ()) -> Path:
    return write_csv(trajectories_frame(trajectories), path, header)


# =============================================================================
# SIMULATION
# =============================================================================

@dataclass(frozen=True)
class SpatialParams:
    """
    Spatial run settings. tau_window defaults to 2 * tau_p and r_ms_max to
    0.1 / dt. Interactions stop for good at comm_cut when it is set.
    """
    geometry: CylinderGeometry = field(default_factory=CylinderGeometry)
    los: LosParams = field(default_factory=LosParams)
    drift: DriftParams = field(default_factory=DriftParams)
    regime: str = "collaborative"
    tau_p: float = 20.0
    gamma_thresh: float = 0.4
    delta_p0: float = 1.0
    dt: float = 0.05
    tau_window: Optional[float] = None
    tau_refresh: float = 1.0
    alpha: float = 1e-3
    r_ms_max: Optional[float] = None
    comm_cut: Optional[float] = None

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ConfigError(f"regime must be one of {REGIMES}", field="regime")
        if not self.tau_p > 0:
            raise ConfigError("tau_p must be > 0", field="tau_p")
        if not self.dt > 0:
            raise ConfigError("dt must be > 0", field="dt")
        if not self.tau_refresh > 0:
            raise ConfigError("tau_refresh must be > 0", field="tau_refresh")
        if not self.alpha > 0:
            raise ConfigError("alpha must be > 0", field="alpha")
        if self.tau_window is not None and not self.tau_window > 0:
            raise ConfigError("tau_window must be > 0", field="tau_window")
        DisorientationParams(self.delta_p0, self.gamma_thresh)

    @property
    def window(self) -> float:
        return self.tau_window if self.tau_window is not None else 2.0 * self.tau_p

    @property
    def switch_rate_cap(self) -> float:
        return self.r_ms_max if self.r_ms_max is not None else MAX_SWITCH_PROBABILITY / self.dt

    def switch_policy(self) -> SwitchPolicy:
        warmup = int(math.ceil(self.window / self.dt - 1e-9))
        return SwitchPolicy(self.regime == "collaborative", None, self.alpha,
                            self.switch_rate_cap, self.window, warmup, self.dt)

    def with_changes(self, **changes) -> "SpatialParams":
        return replace(self, **changes)


@dataclass
class SpatialResult:
    run: RunResult
    network: InteractionNetwork
    robot_ids: List[int]

    @property
    def productivity(self) -> float:
        return self.run.productivity_per_agent

    @property
    def events(self) -> List[InteractionEvent]:
        return self.run.interaction_log

    def mode_fraction(self, robot_id: int, mode: AgentMode, t_from: float = 0.0) -> float:
        """Share of recorded instants at or after t_from spent in mode."""
        modes = self.run.mode_series_of(robot_id)
        selected = [m for t, m in zip(self.run.times, modes) if t >= t_from - 1e-9]
        if not selected:
            return 0.0
        return sum(1 for m in selected if m is mode) / len(selected)

    def first_entry(self, robot_id: int, mode: AgentMode, after: float = 0.0) -> Optional[float]:
        """First recorded time after `after` at which the robot enters mode."""
        modes = self.run.mode_series_of(robot_id)
        previous = None
        for t, m in zip(self.run.times, modes):
            if t > after and m is mode and previous is not mode:
                return float(t)
            previous = m
        return None


InitialModes = Union[None, Mapping[int, AgentMode], Sequence[AgentMode]]


class SpatialWorld:
    """Per-step state of a spatial run; mirrors wellmixed.World for the shared phases."""

    def __init__(self, trajectories: Sequence[Trajectory], params: SpatialParams,
                 collaboration: Collaboration, initial_modes: InitialModes, seed: int,
                 record_modes: bool, log_interactions: bool):
        self.params = params
        self.dt = params.dt
        self.trajectories = align(trajectories, params.dt)
        self.robot_ids = [t.robot_id for t in self.trajectories]
        self.times = self.trajectories[0].t
        self.n_steps = len(self.times) - 1
        if self.n_steps < 1:
            raise InputError("trajectories overlap for less than one step")
        self.regime = params.regime
        self.collaboration = collaboration
        self.log_interactions = log_interactions
        self.seed = seed

        modes = self._initial_modes(initial_modes)
        agents = []
        for traj, mode in zip(self.trajectories, modes):
            delta_p0 = traj.delta_p0 if traj.delta_p0 is not None else params.delta_p0
            agents.append(Agent(traj.robot_id, mode, agent_rng(seed, traj.robot_id),
                                DisorientationParams(delta_p0, params.gamma_thresh)))
        self.population = Population(agents)
        self.dagger_steps = max(1, int(round(params.tau_p / self.dt)))
        self.switcher = params.switch_policy()
        self.events: List[InteractionEvent] = []
        self.n_interactions = 0

        self.phi = np.vstack([t.phi for t in self.trajectories])
        self.z = np.vstack([t.z for t in self.trajectories])
        self.replay = [t.drift_offsets(params.geometry) if t.has_estimate else None
                       for t in self.trajectories]
        self.anchors = [r[0].copy() if r is not None else None for r in self.replay]
        n = len(agents)
        self.contact = np.zeros((n, n), dtype=bool)
        self.last_fire = np.full((n, n), -np.inf)
        self._index = {agent.id: i for i, agent in enumerate(agents)}

        if self.regime == "individual":
            for agent in agents:
                if agent.mode is AgentMode.PL:
                    self.population.set_mode(agent, AgentMode.DR_NOTLOST, 1)
                elif agent.mode is AgentMode.DR_LOST:
                    enter_dagger(self.population, agent, 0)
        self.recorder = Recorder(self.n_steps, n, self.dt, 1, record_modes, t0=float(self.times[0]))
        self.recorder.fill(self.population, 0, 0)
        self.step_index = 0

    @property
    def agents(self) -> List[Agent]:
        return self.population.agents

    def _initial_modes(self, initial_modes: InitialModes) -> List[AgentMode]:
        n = len(self.robot_ids)
        if initial_modes is None:
            return [AgentMode.DR_NOTLOST] * n
        if isinstance(initial_modes, Mapping):
            unknown = sorted(set(initial_modes) - set(self.robot_ids))
            if unknown:
                raise InputError(f"initial modes name robots without a trajectory: {unknown}")
            return [AgentMode(initial_modes.get(rid, AgentMode.DR_NOTLOST)) for rid in self.robot_ids]
        modes = [AgentMode(m) for m in initial_modes]
        if len(modes) != n:
            raise InputError(f"{len(modes)} initial modes for {n} trajectories")
        return modes

    def reset(self, agent: Agent, k: int, was_lost: bool) -> None:
        agent.error_magnitude = 0.0
        agent.offset[:] = 0.0
        agent.reset_step = k
        i = self._index[agent.id]
        if self.replay[i] is not None:
            self.anchors[i] = self.replay[i][k].copy()

    def time_at(self, k: int) -> float:
        return float(self.times[k])

    def _interactions_open(self, k: int) -> bool:
        if self.regime == "individual":
            return False
        cut = self.params.comm_cut
        return cut is None or self.times[k] < cut - 1e-9

    def step(self) -> None:
        self.step_index += 1
        k = self.step_index
        now = self.time_at(k)
        population = self.population
        individual = self.regime == "individual"
        sigma = self.params.drift.sigma

        for i, agent in enumerate(self.agents):
            offsets = self.replay[i]
            if offsets is None:
                update_drift(agent, sigma, self.dt)
            elif agent.mode.is_dead_reckoner:
                delta = offsets[k] - self.anchors[i]
                agent.error_magnitude = float(math.hypot(delta[0], delta[1]))
            else:
                self.anchors[i] = offsets[k].copy()
                agent.error_magnitude = 0.0
            if check_drift_loss(population, agent, k) and individual:
                enter_dagger(population, agent, k)

        finish_relocalization(self, k, individual)

        if self._interactions_open(k):
            visible = visibility_matrix(self.phi[:, k], self.z[:, k], self.params.geometry,
                                        self.params.los)
            for i, j in np.argwhere(np.triu(visible, 1)):
                fresh = not self.contact[i, j]
                if fresh or now - self.last_fire[i, j] >= self.params.tau_refresh - 1e-9:
                    meet(self, self.agents[i], self.agents[j], k)
                    self.last_fire[i, j] = now
            self.contact = visible
        else:
            self.contact[:] = False

        switch_modes(self, k)
        self.recorder.fill(population, k, k)

    def result(self) -> SpatialResult:
        totals = self.population.close(self.n_steps)
        n = len(self.agents)
        run = RunResult(
            productivity_per_agent=sum(totals) / (n * self.n_steps),
            per_agent_productivity=[count / self.n_steps for count in totals],
            times=self.recorder.times,
            occupancy_series=self.recorder.occupancy,
            interaction_log=self.events,
            mode_series=self.recorder.modes,
            seed=self.seed,
            dt=self.dt,
            n_steps=self.n_steps,
            regime=self.regime,
            collaboration=self.collaboration.value,
            r_int=float("nan"),
            n_agents=n,
            n_interactions=self.n_interactions,
            agent_ids=list(self.robot_ids),
        )
        window = (float(self.times[0]), float(self.times[-1]))
        return SpatialResult(run, build_network(self.events, self.robot_ids, window),
                             list(self.robot_ids))


def run_spatial(trajectories: Sequence[Trajectory], params: SpatialParams = SpatialParams(),
                collaboration: Collaboration = Collaboration.SMART,
                initial_modes: InitialModes = None, seed: int = 0,
                record_modes: bool = True, log_interactions: bool = True) -> SpatialResult:
    """
    Simulate robots along the given trajectories.

    Args:
        trajectories: One per robot; resampled onto a common params.dt grid
        params: Geometry, line of sight, drift and switching settings
        collaboration: Basic or smart correction
        initial_modes: Robot id -> mode, or one mode per robot in id order;
            robots not named start as DR_NOTLOST
        seed: Root of the per-robot random streams

    Returns:
        SpatialResult with the run accounting and the interaction network

    Raises:
        InputError: Duplicate ids, non-overlapping trajectories, or initial
            modes naming robots that have no trajectory
    """
    world = SpatialWorld(trajectories, params, collaboration, initial_modes, seed,
                         record_modes, log_interactions)
    logger.debug("spatial run seed=%d regime=%s robots=%d steps=%d", seed, params.regime,
                 len(world.agents), world.n_steps)
    while world.step_index < world.n_steps:
        world.step()
    result = world.result()
    logger.debug("spatial run seed=%d productivity=%.4f interactions=%d", seed,
                 result.productivity, world.n_interactions)
    return result


def mode_series_frame(result: SpatialResult) -> pd.DataFrame:
    return result.run.mode_frame()
