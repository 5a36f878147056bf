"""
Experiment configuration files.

## Quick Reference

    >>> config = load_config("experiment.local.json")
    >>> config.layer, config.regime, config.seeds
    >>> config.r_int_values            # expanded grid
    >>> config.with_overrides(seed=42, workers=8)

Experiments are JSON documents. Keys starting with "_" are comments and are
ignored, like the "_comment" entries in the other *.sample.json files. Any
other unknown key is rejected. Grid-valued fields accept a list, a single
number, or {"start", "stop", "num", "scale": "linear" | "log"}.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from itertools import product
from pathlib import Path
from typing import Any, Dict, Iterator, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .core import (
    AgentMode, Collaboration, CollaborativeSwitching, DisorientationParams, FixedModes,
    IndividualSwitching, ModeSwitch, SwarmParams,
)
from .errors import ConfigError, SwarmError
from .spatial import CylinderGeometry, DriftParams, LosParams, SpatialParams, WalkParams
from .wellmixed import (
    DeterministicLoss, DriftLoss, ExponentialLoss, LossModel, RunConfig,
)

logger = logging.getLogger(__name__)

LAYERS = ("meanfield", "wellmixed", "spatial")
REGIMES = ("fixed", "individual", "collaborative")
LOSS_MODELS = ("deterministic", "exponential", "drift")
SCENARIOS = ("formation", "coverage", "file")
GRID_KEYS = {"start", "stop", "num", "scale"}
DEFAULT_CONFIG_NAMES = ("experiment.local.json", "experiment.json")

GridSpec = Union[float, int, Sequence[float], Mapping[str, Any]]


# =============================================================================
# GRIDS
# =============================================================================

def expand_grid(spec: GridSpec, field_name: str) -> Tuple[float, ...]:
    """
    Expand a grid spec into a nonempty tuple of floats.

    Raises:
        ConfigError: Empty list, unknown grid keys, non-numeric values, or a
            log grid with non-positive bounds
    """
    if isinstance(spec, bool):
        raise ConfigError("expected a number or a grid", field=field_name)
    if isinstance(spec, (int, float)):
        return (float(spec),)
    if isinstance(spec, Mapping):
        unknown = sorted(k for k in spec if k not in GRID_KEYS and not k.startswith("_"))
        if unknown:
            raise ConfigError(f"unknown grid keys {unknown}", field=field_name)
        try:
            start = float(spec["start"])
            stop = float(spec["stop"])
            num = int(spec["num"])
        except KeyError as e:
            raise ConfigError(f"grid needs start, stop and num (missing {e})", field=field_name) from e
        except (TypeError, ValueError) as e:
            raise ConfigError(f"grid bounds must be numbers: {e}", field=field_name) from e
        scale = spec.get("scale", "linear")
        if num < 1:
            raise ConfigError("grid num must be >= 1", field=field_name)
        if scale == "linear":
            values = np.linspace(start, stop, num)
        elif scale == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError("log grid bounds must be > 0", field=field_name)
            values = np.logspace(np.log10(start), np.log10(stop), num)
        else:
            raise ConfigError(f"grid scale must be 'linear' or 'log', got {scale!r}",
                              field=field_name)
        return tuple(float(v) for v in values)
    if isinstance(spec, (list, tuple)):
        if not spec:
            raise ConfigError("grid must not be empty", field=field_name)
        try:
            return tuple(float(v) for v in spec)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"grid values must be numbers: {e}", field=field_name) from e
    raise ConfigError(f"expected a number or a grid, got {type(spec).__name__}", field=field_name)


def _field(where: str, key: str) -> str:
    return f"{where}.{key}" if where else key


def _check_keys(data: Mapping[str, Any], allowed: Sequence[str], where: str) -> Dict[str, Any]:
    if not isinstance(data, Mapping):
        raise ConfigError("expected an object", field=where)
    clean = {k: v for k, v in data.items() if not str(k).startswith("_")}
    unknown = sorted(k for k in clean if k not in allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}", field=_field(where, unknown[0]))
    return clean


def _number(data: Mapping[str, Any], key: str, default: Optional[float], where: str,
            kind=float) -> Optional[float]:
    value = data.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", field=_field(where, key))
    return kind(value)


def _choice(data: Mapping[str, Any], key: str, default: str, options: Sequence[str],
            where: str) -> str:
    value = data.get(key, default)
    if value not in options:
        raise ConfigError(f"must be one of {list(options)}, got {value!r}", field=_field(where, key))
    return value


# =============================================================================
# SECTIONS
# =============================================================================

@dataclass(frozen=True)
class ParamsSection:
    """Swarm parameters shared by the meanfield and wellmixed layers."""
    n_agents: int = 30
    r_lost: Tuple[float, ...] = (0.04,)
    r_int: Tuple[float, ...] = (1.0,)
    tau_p: float = 10.0
    delta_p0: float = 1.0
    gamma_thresh: float = 0.4
    horizon: float = 200.0
    dt: float = 0.01

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ParamsSection":
        where = "params"
        data = _check_keys(data, [f for f in cls.__dataclass_fields__], where)
        defaults = cls()
        return cls(
            n_agents=int(_number(data, "n_agents", defaults.n_agents, where, int)),
            r_lost=expand_grid(data.get("r_lost", list(defaults.r_lost)), f"{where}.r_lost"),
            r_int=expand_grid(data.get("r_int", list(defaults.r_int)), f"{where}.r_int"),
            tau_p=_number(data, "tau_p", defaults.tau_p, where),
            delta_p0=_number(data, "delta_p0", defaults.delta_p0, where),
            gamma_thresh=_number(data, "gamma_thresh", defaults.gamma_thresh, where),
            horizon=_number(data, "horizon", defaults.horizon, where),
            dt=_number(data, "dt", defaults.dt, where),
        )


@dataclass(frozen=True)
class MeanFieldSection:
    n_pl: Tuple[float, ...] = (1.0, 5.0, 10.0, 15.0, 20.0, 25.0, 29.0)
    alpha: float = 0.01
    include_best: bool = False

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "MeanFieldSection":
        where = "meanfield"
        data = _check_keys(data, [f for f in cls.__dataclass_fields__], where)
        defaults = cls()
        n_pl = expand_grid(data.get("n_pl", list(defaults.n_pl)), f"{where}.n_pl")
        if any(v != int(v) for v in n_pl):
            raise ConfigError("n_pl values must be whole numbers", field=f"{where}.n_pl")
        return cls(
            n_pl=n_pl,
            alpha=_number(data, "alpha", defaults.alpha, where),
            include_best=bool(data.get("include_best", defaults.include_best)),
        )


@dataclass(frozen=True)
class WellMixedSection:
    loss: str = "deterministic"
    tau_lost: float = 3.46
    sigma: float = 0.25
    collaboration: Tuple[str, ...] = ("basic",)
    initial_fraction: Tuple[float, ...] = (0.1, 0.3, 0.5, 0.7, 0.9)
    alpha: float = 1.0
    r_ms: Optional[float] = None
    local_estimate: bool = True
    tau_window: Optional[float] = None
    write_series: bool = False

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "WellMixedSection":
        where = "wellmixed"
        data = _check_keys(data, [f for f in cls.__dataclass_fields__], where)
        defaults = cls()
        collaboration = data.get("collaboration", list(defaults.collaboration))
        if isinstance(collaboration, str):
            collaboration = [collaboration]
        for value in collaboration:
            if value not in (c.value for c in Collaboration):
                raise ConfigError(f"unknown collaboration {value!r}", field=f"{where}.collaboration")
        fractions = expand_grid(data.get("initial_fraction", list(defaults.initial_fraction)),
                                f"{where}.initial_fraction")
        if any(not 0.0 <= f <= 1.0 for f in fractions):
            raise ConfigError("initial fractions must lie in [0, 1]",
                              field=f"{where}.initial_fraction")
        return cls(
            loss=_choice(data, "loss", defaults.loss, LOSS_MODELS, where),
            tau_lost=_number(data, "tau_lost", defaults.tau_lost, where),
            sigma=_number(data, "sigma", defaults.sigma, where),
            collaboration=tuple(collaboration),
            initial_fraction=fractions,
            alpha=_number(data, "alpha", defaults.alpha, where),
            r_ms=_number(data, "r_ms", None, where),
            local_estimate=bool(data.get("local_estimate", defaults.local_estimate)),
            tau_window=_number(data, "tau_window", None, where),
            write_series=bool(data.get("write_series", defaults.write_series)),
        )


@dataclass(frozen=True)
class SpatialSection:
    scenario: str = "formation"
    trajectories: Optional[str] = None
    runs: int = 30
    n_robots: int = 10
    duration: float = 200.0
    comm_cut: Optional[float] = None
    initial_pl: Optional[Tuple[int, ...]] = None
    offsets: Tuple[float, ...] = (0.0, 0.005, 0.010)
    delta_p0: Tuple[float, ...] = (1.0, 1.3, 1.5)
    collaboration: str = "smart"
    sigma: float = 0.25
    alpha: float = 1e-3
    tau_p: float = 20.0
    gamma_thresh: float = 0.4
    tau_window: Optional[float] = None
    tau_refresh: float = 1.0
    dt: float = 0.05
    radius: float = 0.3
    height: float = 1.0
    theta_max: float = 1.5707963267948966
    d_max: float = 0.5
    eps_occ: float = 0.02
    speed: float = 0.05
    heading_noise: float = 0.5

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SpatialSection":
        where = "spatial"
        data = _check_keys(data, [f for f in cls.__dataclass_fields__], where)
        defaults = cls()
        values: Dict[str, Any] = {}
        for name in ("duration", "sigma", "alpha", "tau_p", "gamma_thresh", "tau_refresh", "dt",
                     "radius", "height", "theta_max", "d_max", "eps_occ", "speed",
                     "heading_noise"):
            values[name] = _number(data, name, getattr(defaults, name), where)
        values["runs"] = int(_number(data, "runs", defaults.runs, where, int))
        values["n_robots"] = int(_number(data, "n_robots", defaults.n_robots, where, int))
        values["comm_cut"] = _number(data, "comm_cut", None, where)
        values["tau_window"] = _number(data, "tau_window", None, where)
        values["scenario"] = _choice(data, "scenario", defaults.scenario, SCENARIOS, where)
        values["collaboration"] = _choice(data, "collaboration", defaults.collaboration,
                                          [c.value for c in Collaboration], where)
        trajectories = data.get("trajectories")
        if trajectories is not None and not isinstance(trajectories, str):
            raise ConfigError("expected a file path", field=f"{where}.trajectories")
        if values["scenario"] == "file" and not trajectories:
            raise ConfigError("scenario 'file' needs a trajectories path",
                              field=f"{where}.trajectories")
        values["trajectories"] = trajectories
        if "initial_pl" in data and data["initial_pl"] is not None:
            initial = data["initial_pl"]
            if not isinstance(initial, list) or any(isinstance(i, bool) or not isinstance(i, int)
                                                    for i in initial):
                raise ConfigError("expected a list of robot ids", field=f"{where}.initial_pl")
            values["initial_pl"] = tuple(initial)
        values["offsets"] = expand_grid(data.get("offsets", list(defaults.offsets)),
                                        f"{where}.offsets")
        values["delta_p0"] = expand_grid(data.get("delta_p0", list(defaults.delta_p0)),
                                         f"{where}.delta_p0")
        if len(values["offsets"]) != len(values["delta_p0"]):
            raise ConfigError("offsets and delta_p0 must have the same length",
                              field=f"{where}.delta_p0")
        if values["runs"] < 1 or values["n_robots"] < 1:
            raise ConfigError("runs and n_robots must be >= 1", field=f"{where}.runs")
        return cls(**values)


# =============================================================================
# EXPERIMENT
# =============================================================================

@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment: one layer, one regime, expanded grids and seeds."""
    layer: str = "meanfield"
    regime: str = "fixed"
    seed: int = 0
    runs: int = 1
    workers: int = 1
    out: str = "results"
    params: ParamsSection = field(default_factory=ParamsSection)
    meanfield: MeanFieldSection = field(default_factory=MeanFieldSection)
    wellmixed: WellMixedSection = field(default_factory=WellMixedSection)
    spatial: SpatialSection = field(default_factory=SpatialSection)
    source: Optional[str] = None

    @property
    def seeds(self) -> Tuple[int, ...]:
        return tuple(range(self.seed, self.seed + self.runs))

    @property
    def r_int_values(self) -> Tuple[float, ...]:
        return self.params.r_int

    @property
    def r_lost_values(self) -> Tuple[float, ...]:
        return self.params.r_lost

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    def mode_switch(self, n_pl: int = 0) -> ModeSwitch:
        if self.regime == "fixed":
            return FixedModes(int(n_pl))
        if self.regime == "individual":
            return IndividualSwitching()
        if self.layer == "meanfield":
            return CollaborativeSwitching(alpha=self.meanfield.alpha)
        section = self.wellmixed
        return CollaborativeSwitching(alpha=section.alpha, r_ms=section.r_ms,
                                      local_estimate=section.local_estimate)

    def swarm_params(self, r_lost: float, r_int: float, n_pl: int = 0) -> SwarmParams:
        p = self.params
        return SwarmParams(
            n_agents=p.n_agents, r_lost=r_lost, r_int=r_int, tau_p=p.tau_p,
            mode_switch=self.mode_switch(n_pl),
            disorientation=DisorientationParams(p.delta_p0, p.gamma_thresh),
            horizon=p.horizon, dt=p.dt,
        )

    def base_params(self) -> SwarmParams:
        return self.swarm_params(self.r_lost_values[0], self.r_int_values[0])

    def cells(self) -> Iterator[Tuple[float, float, int]]:
        """Every (r_lost, r_int, n_pl) combination of the grids."""
        n_pl_values: Sequence[float] = (0,)
        if self.layer == "meanfield":
            n_pl_values = self.meanfield.n_pl
        for r_lost, r_int, n_pl in product(self.r_lost_values, self.r_int_values, n_pl_values):
            yield r_lost, r_int, int(n_pl)

    def validate(self) -> "ExperimentConfig":
        """Build every grid cell once so a bad one fails before any run starts."""
        for r_lost, r_int, n_pl in self.cells():
            try:
                self.swarm_params(r_lost, r_int, n_pl)
                if self.layer == "meanfield":
                    self.swarm_params(r_lost, r_int, 0).with_changes(mode_switch=FixedModes(n_pl))
            except ConfigError as e:
                raise ConfigError(f"{e.message} in cell r_lost={r_lost}, r_int={r_int}, "
                                  f"n_pl={n_pl}", field=e.field) from e
        if self.layer == "wellmixed":
            if len(self.r_lost_values) != 1:
                raise ConfigError("wellmixed runs take a single r_lost", field="params.r_lost")
            if self.regime == "collaborative":
                self.mode_switch()
        return self

    def with_overrides(self, seed: Optional[int] = None, workers: Optional[int] = None,
                       out: Optional[str] = None) -> "ExperimentConfig":
        changes: Dict[str, Any] = {}
        if seed is not None:
            if seed < 0:
                raise ConfigError("seed must be >= 0", field="seed")
            changes["seed"] = int(seed)
        if workers is not None:
            if workers < 1:
                raise ConfigError("workers must be >= 1", field="workers")
            changes["workers"] = int(workers)
        if out is not None:
            changes["out"] = str(out)
        return replace(self, **changes)

    def resolved(self) -> Dict[str, Any]:
        """Fully expanded config as plain JSON types, for output headers."""
        data = asdict(self)
        data.pop("source", None)
        data.pop("workers", None)
        data.pop("out", None)
        return json.loads(json.dumps(data))

    def with_layer(self, layer: str) -> "ExperimentConfig":
        if layer not in LAYERS:
            raise ConfigError(f"layer must be one of {list(LAYERS)}", field="layer")
        if layer == self.layer:
            return self
        return replace(self, layer=layer).validate()

    # -------------------------------------------------------------------------
    # Builders for the simulators
    # -------------------------------------------------------------------------

    def loss_model(self) -> LossModel:
        section = self.wellmixed
        if section.loss == "exponential":
            return ExponentialLoss(self.r_lost_values[0])
        if section.loss == "drift":
            return DriftLoss(section.sigma)
        return DeterministicLoss(section.tau_lost)

    def run_config(self, collaboration: str) -> RunConfig:
        """Base well-mixed run; the sweep fills in r_int, initial modes and seed."""
        return RunConfig(
            params=self.base_params(),
            loss=self.loss_model(),
            collaboration=Collaboration(collaboration),
            seed=self.seed,
            tau_window=self.wellmixed.tau_window,
        )

    def spatial_params(self) -> SpatialParams:
        s = self.spatial
        return SpatialParams(
            geometry=CylinderGeometry(s.radius, s.height),
            los=LosParams(s.theta_max, s.d_max, s.eps_occ),
            drift=DriftParams(s.sigma),
            regime=self.regime,
            tau_p=s.tau_p,
            gamma_thresh=s.gamma_thresh,
            delta_p0=s.delta_p0[0],
            dt=s.dt,
            tau_window=s.tau_window,
            tau_refresh=s.tau_refresh,
            alpha=s.alpha,
            comm_cut=s.comm_cut,
        )

    def walk_params(self) -> WalkParams:
        return WalkParams(self.spatial.speed, self.spatial.heading_noise, self.spatial.dt)

    def initial_modes(self, robot_ids: Sequence[int],
                      default_pl: Sequence[int] = ()) -> Dict[int, AgentMode]:
        """Robots named in spatial.initial_pl (or default_pl) start as PL."""
        pl = self.spatial.initial_pl if self.spatial.initial_pl is not None else tuple(default_pl)
        unknown = sorted(set(pl) - set(robot_ids))
        if unknown:
            raise ConfigError(f"initial_pl names unknown robots {unknown}",
                              field="spatial.initial_pl")
        return {rid: (AgentMode.PL if rid in pl else AgentMode.DR_NOTLOST) for rid in robot_ids}


TOP_LEVEL_KEYS = ("layer", "regime", "seed", "runs", "workers", "out", "params", "meanfield",
                  "wellmixed", "spatial")


def config_from_dict(data: Mapping[str, Any], source: Optional[str] = None) -> ExperimentConfig:
    """Validate a parsed document and fill in defaults."""
    data = _check_keys(data, TOP_LEVEL_KEYS, "")
    defaults = ExperimentConfig()
    layer = _choice(data, "layer", defaults.layer, LAYERS, "")
    regime = _choice(data, "regime", defaults.regime, REGIMES, "")
    seed = int(_number(data, "seed", defaults.seed, "", int))
    runs = int(_number(data, "runs", defaults.runs, "", int))
    workers = int(_number(data, "workers", defaults.workers, "", int))
    if seed < 0:
        raise ConfigError("seed must be >= 0", field="seed")
    if runs < 1:
        raise ConfigError("runs must be >= 1", field="runs")
    if workers < 1:
        raise ConfigError("workers must be >= 1", field="workers")
    out = data.get("out", defaults.out)
    if not isinstance(out, str):
        raise ConfigError("expected a directory path", field="out")

    config = ExperimentConfig(
        layer=layer, regime=regime, seed=seed, runs=runs, workers=workers, out=out,
        params=ParamsSection.from_dict(data.get("params", {})),
        meanfield=MeanFieldSection.from_dict(data.get("meanfield", {})),
        wellmixed=WellMixedSection.from_dict(data.get("wellmixed", {})),
        spatial=SpatialSection.from_dict(data.get("spatial", {})),
        source=source,
    )
    return config.validate()


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Read and validate an experiment file.

    Raises:
        ConfigError: Missing file, invalid JSON (with line and column), an
            unknown key, or an invalid value (with the field name)
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON in {path}: {e.msg}", line=e.lineno, column=e.colno) from e
    try:
        config = config_from_dict(data, str(path))
    except SwarmError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from e
    logger.debug("loaded %s: layer=%s regime=%s", path, config.layer, config.regime)
    return config


def find_config_file(filename: Optional[str] = None) -> Optional[Path]:
    """
    Locate the experiment file.

    Priority:
    1. Explicit filename argument
    2. experiment.local.json in project root
    3. experiment.json in project root
    """
    project_root = Path(__file__).resolve().parent.parent.parent
    if filename:
        path = Path(filename)
        if path.exists():
            return path
        raise ConfigError(f"config file not found: {path}")
    for name in DEFAULT_CONFIG_NAMES:
        candidate = project_root / name
        if candidate.exists():
            return candidate
    return None
