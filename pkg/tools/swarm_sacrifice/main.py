#!/usr/bin/env python3
"""
Command-line front end for the swarm sacrifice simulators.

Usage:
    python tools/swarm_sacrifice/main.py meanfield --config experiment.local.json
    python tools/swarm_sacrifice/main.py wellmixed --config sweep.json --workers 8
    python tools/swarm_sacrifice/main.py spatial --config formation.json --out results/
    python tools/swarm_sacrifice/main.py sweep --config experiment.local.json --seed 7

Every subcommand writes CSV files into --out (default: the config's "out"),
each starting with '#' lines that hold the resolved config and seed. The
printed summary is computed from the files as written.

Environment:
    SWARM_SACRIFICE_WORKERS - Worker processes when --workers is not given
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd

# Allow `python tools/swarm_sacrifice/main.py` as well as `python -m swarm_sacrifice`
TOOLS_DIR = Path(__file__).resolve().parent.parent
if str(TOOLS_DIR) not in sys.path:
    sys.path.insert(0, str(TOOLS_DIR))

from swarm_sacrifice.config import ExperimentConfig, find_config_file, load_config  # noqa: E402
from swarm_sacrifice.core import AgentMode, Collaboration  # noqa: E402
from swarm_sacrifice.errors import ConfigError, SwarmError  # noqa: E402
from swarm_sacrifice.export import header_lines, read_csv, write_csv  # noqa: E402
from swarm_sacrifice.meanfield import MeanFieldRow, meanfield_curves  # noqa: E402
from swarm_sacrifice.network import network_stats  # noqa: E402
from swarm_sacrifice.scenarios import (  # noqa: E402
    coverage_ensemble, ensemble_summary, scenario_coverage, scenario_formation,
)
from swarm_sacrifice.spatial import (  # noqa: E402
    mode_series_frame, read_trajectories, run_spatial, write_trajectories,
)
from swarm_sacrifice.wellmixed import cell_config, run, sweep  # noqa: E402

logger = logging.getLogger("swarm_sacrifice")

WORKERS_ENV = "SWARM_SACRIFICE_WORKERS"
MEANFIELD_COLUMNS = list(MeanFieldRow.__dataclass_fields__)
PRODUCTIVITY_COLUMNS = ["robot_id", "productivity", "effective_rate"]


# =============================================================================
# PLUMBING
# =============================================================================

def configure_logging(verbose: bool = False) -> None:
    """One stream handler printing the usual [INFO]/[WARNING]/[ERROR] tags."""
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("[%(levelname)s] %(message)s"))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.INFO)


def resolve_workers(flag: Optional[int], config: ExperimentConfig) -> int:
    """--workers, then SWARM_SACRIFICE_WORKERS, then the config file."""
    if flag is not None:
        return flag
    value = os.environ.get(WORKERS_ENV)
    if value:
        try:
            workers = int(value)
        except ValueError:
            raise ConfigError(f"not an integer: {value!r}", field=WORKERS_ENV)
        if workers < 1:
            raise ConfigError("must be >= 1", field=WORKERS_ENV)
        return workers
    return config.workers


def prepare_config(args: argparse.Namespace, layer: Optional[str]) -> ExperimentConfig:
    path = find_config_file(args.config)
    if path is None:
        logger.info("No config file found; using defaults")
        config = ExperimentConfig().validate()
    else:
        config = load_config(path)
    if layer is not None:
        config = config.with_layer(layer)
    workers = resolve_workers(args.workers, config)
    return config.with_overrides(seed=args.seed, workers=workers, out=args.out)


def emit(frame: pd.DataFrame, config: ExperimentConfig, name: str,
         extra: Sequence[str] = ()) -> pd.DataFrame:
    """Write one output file and hand back the table as re-read from disk."""
    path = config.out_dir / name
    write_csv(frame, path, header_lines(config.resolved(), config.seed, extra))
    print(f"[OK] Wrote {len(frame)} rows to: {path}")
    return read_csv(path)


def print_table(title: str, frame: pd.DataFrame) -> None:
    print("\n" + "=" * 60)
    print(title)
    print("=" * 60)
    if frame.empty:
        print("(no rows)")
    else:
        print(frame.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
    print("=" * 60)


# =============================================================================
# MEAN FIELD
# =============================================================================

def meanfield_summary(frame: pd.DataFrame) -> pd.DataFrame:
    grouped = frame.groupby(["r_L", "regime"], sort=True)["productivity"]
    return grouped.agg(rows="count", min="min", max="max").reset_index()


def cmd_meanfield(config: ExperimentConfig) -> int:
    """Fixed-mode curves per N_PL plus the optimal, individual and adaptive curves."""
    rows: List[MeanFieldRow] = []
    n_pl_values = [int(v) for v in config.meanfield.n_pl]
    for r_lost in config.r_lost_values:
        base = config.swarm_params(r_lost, config.r_int_values[0])
        logger.debug("meanfield: r_lost=%g, %d r_int values", r_lost, len(config.r_int_values))
        rows.extend(meanfield_curves(base, config.r_int_values, n_pl_values,
                                     alpha=config.meanfield.alpha,
                                     include_best=config.meanfield.include_best))
    frame = pd.DataFrame([vars(row) for row in rows], columns=MEANFIELD_COLUMNS)
    written = emit(frame, config, "meanfield.csv")
    print_table("MEAN-FIELD CURVES", meanfield_summary(written))
    return 0


# =============================================================================
# WELL-MIXED
# =============================================================================

def wellmixed_summary(frame: pd.DataFrame) -> pd.DataFrame:
    """Mean productivity per (collaboration, r_int) and its spread over initial fractions."""
    cells = (frame.groupby(["collaboration", "r_int", "initial_fraction"], sort=True)
             ["productivity"].mean())
    summary = cells.groupby(level=["collaboration", "r_int"]).agg(["mean", "min", "max"])
    summary["spread"] = summary["max"] - summary["min"]
    runs = frame.groupby(["collaboration", "r_int"], sort=True)["productivity"].count()
    summary.insert(0, "runs", runs)
    return summary.reset_index()


def occupancy_series(config: ExperimentConfig) -> pd.DataFrame:
    """Per-second occupancy of every cell at the first seed."""
    stride = max(1, int(round(1.0 / config.params.dt)))
    parts = []
    for collaboration in config.wellmixed.collaboration:
        base = config.run_config(collaboration).with_changes(record_stride=stride)
        for r_int in config.r_int_values:
            for fraction in config.wellmixed.initial_fraction:
                result = run(cell_config(base, r_int, fraction, config.seed))
                part = result.occupancy_frame()
                part.insert(0, "initial_fraction", fraction)
                part.insert(0, "r_int", r_int)
                part.insert(0, "collaboration", collaboration)
                parts.append(part)
    return pd.concat(parts, ignore_index=True)


def cmd_wellmixed(config: ExperimentConfig) -> int:
    """One row per run over r_int x initial fraction x seed, per collaboration model."""
    frames = []
    for collaboration in config.wellmixed.collaboration:
        logger.info("Well-mixed %s/%s: %d runs on %d worker(s)", config.regime, collaboration,
                    len(config.r_int_values) * len(config.wellmixed.initial_fraction)
                    * len(config.seeds), config.workers)
        frames.append(sweep(config.run_config(collaboration), config.r_int_values,
                            config.wellmixed.initial_fraction, config.seeds, config.workers))
    written = emit(pd.concat(frames, ignore_index=True), config, "wellmixed.csv",
                   [f"loss: {config.wellmixed.loss}"])
    if config.wellmixed.write_series:
        emit(occupancy_series(config), config, "occupancy.csv")
    print_table("WELL-MIXED RUNS", wellmixed_summary(written))
    return 0


# =============================================================================
# SPATIAL
# =============================================================================

def isolated_robots(network: pd.DataFrame, robot_ids: Sequence[int]) -> List[int]:
    met = set(network["id_a"]) | set(network["id_b"])
    return [rid for rid in robot_ids if rid not in met]


def formation_report(modes: pd.DataFrame, config: ExperimentConfig, hub: int) -> pd.DataFrame:
    """Share of post-transient time each robot spends as PL, and cycling onset after a cut."""
    settle_from = modes["t"].min() + config.spatial_params().window
    rows = []
    cut = config.spatial.comm_cut
    for robot_id, group in modes.groupby("robot_id", sort=True):
        settled = group[group["t"] >= settle_from - 1e-9]
        row = {
            "robot_id": int(robot_id),
            "hub": int(robot_id) == hub,
            "pl_share": float((settled["mode"] == AgentMode.PL.value).mean()) if len(settled) else 0.0,
        }
        if cut is not None:
            after = group[(group["t"] > cut) & (group["mode"] == AgentMode.PL_DAGGER.value)]
            row["cycling_from"] = float(after["t"].iloc[0]) if len(after) else float("nan")
        rows.append(row)
    return pd.DataFrame(rows)


def cmd_spatial(config: ExperimentConfig) -> int:
    """One detailed run of the chosen scenario; coverage also runs the ensemble."""
    s = config.spatial
    params = config.spatial_params()
    walk = config.walk_params()
    hub = None
    coverage_runs = None

    if s.scenario == "formation":
        formation = scenario_formation(s.duration, s.offsets, s.delta_p0, config.seed, params, walk)
        trajectories = formation.trajectories
        hub = formation.hub
    elif s.scenario == "coverage":
        coverage_runs = scenario_coverage(s.n_robots, config.seed, s.runs, s.duration,
                                          params.geometry, walk)
        trajectories = coverage_runs[0]
    else:
        trajectories = read_trajectories(s.trajectories)

    robot_ids = sorted(t.robot_id for t in trajectories)
    default_pl = (hub,) if hub is not None else ()
    result = run_spatial(trajectories, params, Collaboration(s.collaboration),
                         config.initial_modes(robot_ids, default_pl), config.seed)

    path = write_trajectories(trajectories, config.out_dir / "trajectories.csv",
                              header_lines(config.resolved(), config.seed))
    print(f"[OK] Wrote {len(trajectories)} trajectories to: {path}")
    stats = network_stats(result.events, robot_ids, result.network.window)
    network = emit(stats.network.to_frame(), config, "network.csv")
    modes = emit(mode_series_frame(result), config, "modes.csv")
    productivity = emit(pd.DataFrame({"robot_id": result.robot_ids,
                                      "productivity": result.run.per_agent_productivity,
                                      "effective_rate": [stats.effective_rates[rid]
                                                         for rid in result.robot_ids]},
                                     columns=PRODUCTIVITY_COLUMNS),
                        config, "productivity.csv")

    print_table(f"SPATIAL RUN ({s.scenario}, {config.regime}, {s.collaboration})", productivity)
    print(f"Swarm productivity: {productivity['productivity'].mean():.4f}")
    isolated = isolated_robots(network, robot_ids)
    if isolated:
        print(f"Isolated robots:    {isolated}")
    if hub is not None:
        print_table(f"FORMATION (hub = robot {hub})", formation_report(modes, config, hub))

    if coverage_runs is not None:
        ensemble = spatial_ensemble(config, coverage_runs)
        print_table(f"COVERAGE ENSEMBLE ({s.runs} runs)", ensemble_summary(ensemble))
    return 0


def spatial_ensemble(config: ExperimentConfig, runs=None) -> pd.DataFrame:
    s = config.spatial
    params = config.spatial_params()
    if runs is None:
        runs = scenario_coverage(s.n_robots, config.seed, s.runs, s.duration, params.geometry,
                                 config.walk_params())
    frame = coverage_ensemble(runs, params, regimes=(config.regime,), seed=config.seed,
                              workers=config.workers)
    return emit(frame, config, "ensemble.csv")


# =============================================================================
# SWEEP
# =============================================================================

def cmd_sweep(config: ExperimentConfig) -> int:
    """Run the configured layer's whole grid; spatial sweeps run the coverage ensemble."""
    if config.layer == "meanfield":
        return cmd_meanfield(config)
    if config.layer == "wellmixed":
        return cmd_wellmixed(config)
    ensemble = spatial_ensemble(config)
    print_table(f"COVERAGE ENSEMBLE ({config.spatial.runs} runs)", ensemble_summary(ensemble))
    return 0


COMMANDS = {
    "meanfield": cmd_meanfield,
    "wellmixed": cmd_wellmixed,
    "spatial": cmd_spatial,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Mean-field, well-mixed and spatial models of swarm localization sacrifice",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
    # Mean-field curves from the sample experiment
    python main.py meanfield --config experiment.local.json

    # Well-mixed sweep over 30 seeds on 8 processes
    python main.py wellmixed --config sweep.json --workers 8

    # Formation scenario with a communication cut (set spatial.comm_cut in the file)
    python main.py spatial --config formation.json --out results/formation

Config lookup (when --config is omitted):
    1. experiment.local.json in the project root
    2. experiment.json in the project root
    3. built-in defaults

Environment:
    SWARM_SACRIFICE_WORKERS - Worker processes when --workers is not given
        """
    )
    subparsers = parser.add_subparsers(dest="command", help="Commands")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", metavar="PATH", help="Experiment JSON file")
    common.add_argument("--out", "-o", metavar="DIR", help="Output directory (overrides config)")
    common.add_argument("--seed", "-s", type=int, help="Root seed (overrides config)")
    common.add_argument("--workers", "-w", type=int,
                        help=f"Worker processes (default: ${WORKERS_ENV}, then config)")
    common.add_argument("--verbose", "-v", action="store_true", help="Debug logging")

    subparsers.add_parser("meanfield", parents=[common], help="Mean-field steady-state curves")
    subparsers.add_parser("wellmixed", parents=[common], help="Well-mixed agent-based sweep")
    subparsers.add_parser("spatial", parents=[common], help="Spatial scenario run")
    subparsers.add_parser("sweep", parents=[common], help="Run the configured layer's grid")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return 0

    configure_logging(args.verbose)
    layer = None if args.command == "sweep" else args.command
    try:
        config = prepare_config(args, layer)
        return COMMANDS[args.command](config)
    except SwarmError as e:
        logger.error("%s", e)
        return 1
    except OSError as e:
        logger.error("%s", e)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
