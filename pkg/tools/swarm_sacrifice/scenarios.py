"""
Prepared trajectory sets for the spatial experiments.

## Quick Reference

    >>> formation = scenario_formation(seed=3)
    >>> run_spatial(formation.trajectories, formation.params,
    ...             initial_modes=formation.initial_modes, seed=3)
    >>> runs = scenario_coverage(base_seed=11, n_runs=30)
    >>> frame = coverage_ensemble(runs, SpatialParams(), seed=11, workers=4)
    >>> ensemble_summary(frame)
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from .core import AgentMode, Collaboration
from .errors import ConfigError
from .spatial import (
    TWO_PI, CylinderGeometry, SpatialParams, Trajectory, WalkParams, drift_offsets,
    fold, run_spatial, synth_random_walk, with_offsets, wrap_angle,
)

logger = logging.getLogger(__name__)

COVERAGE_STREAM = 4
FORMATION_OFFSETS = (0.0, 0.005, 0.010)
FORMATION_DELTA_P0 = (1.0, 1.3, 1.5)
ENSEMBLE_COLUMNS = ["run", "regime", "productivity"]


@dataclass
class FormationScenario:
    """Three robots stacked along z; robot `hub` sits between the other two."""
    trajectories: List[Trajectory]
    initial_modes: Dict[int, AgentMode]
    hub: int
    params: SpatialParams = field(default_factory=SpatialParams)


def scenario_formation(duration: float = 200.0, offsets: Sequence[float] = FORMATION_OFFSETS,
                       delta_p0: Sequence[float] = FORMATION_DELTA_P0, seed: int = 0,
                       params: SpatialParams = SpatialParams(),
                       walk: WalkParams = WalkParams()) -> FormationScenario:
    """
    One base walk replicated at the given z offsets.

    All robots share a single drift realization (the same inertial record
    moves all of them) and carry it as replayed estimates; per-robot delta_p0
    values are what tell them apart. The middle robot starts as PL.
    """
    if len(offsets) != len(delta_p0):
        raise ConfigError("offsets and delta_p0 must have the same length", field="delta_p0")
    if len(offsets) < 1:
        raise ConfigError("formation needs at least one robot", field="offsets")
    geometry = params.geometry
    spread = max(offsets) - min(offsets)
    base = synth_random_walk(geometry, duration, replace(walk, dt=params.dt), seed=seed)
    base_z = fold(base.z, 0.0, geometry.height - spread) - min(offsets)
    shared = drift_offsets(base.t, params.drift, seed, robot_id=0)

    trajectories = []
    for robot_id, (dz, dp0) in enumerate(zip(offsets, delta_p0)):
        true = Trajectory(robot_id, base.t, base.phi, base_z + dz, delta_p0=float(dp0))
        trajectories.append(with_offsets(true, shared, geometry))

    order = np.argsort(offsets)
    hub = int(order[len(order) // 2])
    modes = {robot_id: AgentMode.DR_NOTLOST for robot_id in range(len(offsets))}
    modes[hub] = AgentMode.PL
    return FormationScenario(trajectories, modes, hub, params)


def base_walks(geometry: CylinderGeometry, n: int, duration: float, base_seed: int,
               walk: WalkParams = WalkParams()) -> List[Trajectory]:
    seeds = np.random.SeedSequence(base_seed).spawn(n)
    return [synth_random_walk(geometry, duration, walk, seed=s, robot_id=i)
            for i, s in enumerate(seeds)]


def scenario_coverage(n: int = 10, base_seed: int = 0, n_runs: int = 30,
                      duration: float = 300.0, geometry: CylinderGeometry = CylinderGeometry(),
                      walk: WalkParams = WalkParams()) -> List[List[Trajectory]]:
    """
    n base walks, re-placed independently for every run: each trajectory
    gets its own rotation about the axis and a z shift, clipped to the surface.
    """
    if n < 1 or n_runs < 1:
        raise ConfigError("coverage needs n >= 1 and n_runs >= 1", field="n_runs")
    walks = base_walks(geometry, n, duration, base_seed, walk)
    runs = []
    for run in range(n_runs):
        rng = np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=(COVERAGE_STREAM, run)))
        placed = []
        for traj in walks:
            rotation = rng.uniform(0.0, TWO_PI)
            shift = rng.uniform(-0.5 * geometry.height, 0.5 * geometry.height)
            placed.append(traj.with_changes(
                phi=wrap_angle(traj.phi + rotation),
                z=np.clip(traj.z + shift, 0.0, geometry.height),
            ))
        runs.append(placed)
    logger.debug("coverage: %d runs x %d robots", n_runs, n)
    return runs


def _ensemble_task(task: Tuple[int, str, List[Trajectory], SpatialParams, int]) -> Dict[str, object]:
    run, regime, trajectories, params, seed = task
    result = run_spatial(trajectories, params.with_changes(regime=regime),
                         Collaboration.SMART, None, seed, record_modes=False,
                         log_interactions=False)
    return {"run": run, "regime": regime, "productivity": result.productivity}


def coverage_ensemble(runs: Sequence[Sequence[Trajectory]], params: SpatialParams,
                      regimes: Sequence[str] = ("individual", "collaborative"),
                      seed: int = 0, workers: int = 1) -> pd.DataFrame:
    """One productivity row per (run, regime); row order is independent of workers."""
    tasks = [(i, regime, list(run), params, seed + i)
             for i, run in enumerate(runs) for regime in regimes]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_ensemble_task, tasks))
    else:
        rows = [_ensemble_task(task) for task in tasks]
    return pd.DataFrame(rows, columns=ENSEMBLE_COLUMNS)


def ensemble_summary(frame: pd.DataFrame) -> pd.DataFrame:
    """Mean and sample standard deviation of productivity per regime."""
    summary = frame.groupby("regime", sort=True)["productivity"].agg(["count", "mean", "std"])
    return summary.reset_index()


def hysteresis_bound(params: SpatialParams) -> float:
    return 2.0 * params.window


def post_transient_start(params: SpatialParams) -> float:
    return params.window


