"""
Core domain model shared by every simulator.

## Quick Reference

    >>> params = DisorientationParams(delta_p0=1.0, gamma_thresh=0.4)
    >>> g = disorientation(1.0, params)        # 1 - e^-1
    >>> is_lost(g, params)
    True
    >>> productivity(AgentMode.DR_NOTLOST, 0.1, params)
    1

Agents live in one of four modes. Dead reckoners are productive while their
disorientation stays at or below the threshold; perfect localizers are never
productive but correct any dead reckoner they meet; PL_DAGGER is the
re-localization penalty state, unproductive and unable to help anyone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import FrozenSet, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigError, DomainError, TransitionError


# =============================================================================
# MODES AND TRANSITIONS
# =============================================================================

class AgentMode(str, Enum):
    """The four agent states. Values double as CSV export labels."""
    DR_NOTLOST = "DR_NOTLOST"
    DR_LOST = "DR_LOST"
    PL_DAGGER = "PL_DAGGER"
    PL = "PL"

    @property
    def is_dead_reckoner(self) -> bool:
        return self in (AgentMode.DR_NOTLOST, AgentMode.DR_LOST)

    @property
    def can_assist(self) -> bool:
        """Only a fully localized PL can correct someone else."""
        return self is AgentMode.PL

    @property
    def index(self) -> int:
        """Position of this mode in an occupancy vector."""
        return MODE_ORDER.index(self)


MODE_ORDER: Tuple[AgentMode, ...] = (
    AgentMode.DR_NOTLOST,
    AgentMode.DR_LOST,
    AgentMode.PL_DAGGER,
    AgentMode.PL,
)


class Collaboration(str, Enum):
    """Who a PL corrects: only lost dead reckoners (basic) or any dead reckoner (smart)."""
    BASIC = "basic"
    SMART = "smart"


ALLOWED_TRANSITIONS: FrozenSet[Tuple[AgentMode, AgentMode]] = frozenset({
    (AgentMode.DR_NOTLOST, AgentMode.DR_LOST),   # rate r_L
    (AgentMode.DR_LOST, AgentMode.DR_NOTLOST),   # corrected by a PL
    (AgentMode.DR_LOST, AgentMode.PL_DAGGER),    # mode switch, rate r_MS
    (AgentMode.PL_DAGGER, AgentMode.PL),         # after tau_p
    (AgentMode.PL, AgentMode.DR_NOTLOST),        # mode switch, rate r_MS
})


def transition(src: AgentMode, dst: AgentMode) -> AgentMode:
    """
    Validate a mode change against the transition graph.

    Args:
        src: Current mode
        dst: Requested mode

    Returns:
        dst, when the edge exists

    Raises:
        TransitionError: If the edge is not part of the graph
    """
    if (src, dst) not in ALLOWED_TRANSITIONS:
        raise TransitionError(f"Transition {src.value} -> {dst.value} is not allowed")
    return dst


# =============================================================================
# PARAMETERS
# =============================================================================

@dataclass(frozen=True)
class DisorientationParams:
    """Characteristic error delta_p0 (length) and lost threshold gamma_thresh."""
    delta_p0: float = 1.0
    gamma_thresh: float = 0.4

    def __post_init__(self):
        if not self.delta_p0 > 0:
            raise ConfigError("delta_p0 must be > 0", field="delta_p0")
        if not 0 < self.gamma_thresh < 1:
            raise ConfigError("gamma_thresh must lie in (0, 1)", field="gamma_thresh")


@dataclass(frozen=True)
class FixedModes:
    """Roles chosen once by the designer; n_pl_initial agents stay PL."""
    n_pl_initial: int = 0
    kind: str = field(default="fixed", init=False)


@dataclass(frozen=True)
class IndividualSwitching:
    """Lost agents re-localize on their own; nobody interacts."""
    kind: str = field(default="individual", init=False)


@dataclass(frozen=True)
class CollaborativeSwitching:
    """
    Mode switching combined with collaboration.

    Exactly one source of r_MS applies, in this priority:
        r_ms            constant rate
        local_estimate  r_MS = alpha / r_hat from each agent's own window
        alpha           adaptive rule r_MS = alpha / r_int
    """
    alpha: Optional[float] = None
    r_ms: Optional[float] = None
    local_estimate: bool = False
    kind: str = field(default="collaborative", init=False)

    def __post_init__(self):
        if self.r_ms is None and self.alpha is None and not self.local_estimate:
            raise ConfigError("collaborative switching needs r_ms, alpha or local_estimate",
                              field="mode_switch")
        if self.r_ms is not None and self.r_ms < 0:
            raise ConfigError("r_ms must be >= 0", field="r_ms")
        if self.alpha is not None and not self.alpha > 0:
            raise ConfigError("alpha must be > 0", field="alpha")


ModeSwitch = Union[FixedModes, IndividualSwitching, CollaborativeSwitching]


@dataclass(frozen=True)
class SwarmParams:
    """All rates and constants of a swarm model."""
    n_agents: int = 30
    r_lost: float = 0.04
    r_int: float = 1.0
    tau_p: float = 10.0
    mode_switch: ModeSwitch = field(default_factory=FixedModes)
    disorientation: DisorientationParams = field(default_factory=DisorientationParams)
    horizon: float = 200.0
    dt: float = 0.01

    def __post_init__(self):
        if self.n_agents < 1:
            raise ConfigError("n_agents must be >= 1", field="n_agents")
        if self.r_lost < 0:
            raise ConfigError("r_lost must be >= 0", field="r_lost")
        if self.r_int < 0:
            raise ConfigError("r_int must be >= 0", field="r_int")
        if not self.tau_p > 0:
            raise ConfigError("tau_p must be > 0", field="tau_p")
        if not self.dt > 0:
            raise ConfigError("dt must be > 0", field="dt")
        if self.horizon < self.dt:
            raise ConfigError("horizon must be >= dt", field="horizon")
        if isinstance(self.mode_switch, FixedModes):
            if not 0 <= self.mode_switch.n_pl_initial <= self.n_agents:
                raise ConfigError("n_pl_initial must satisfy 0 <= N_PL <= N",
                                  field="n_pl_initial")

    @property
    def r_p(self) -> float:
        return 1.0 / self.tau_p

    @property
    def n_pl(self) -> int:
        """Designer-fixed number of perfect localizers (0 outside fixed mode)."""
        if isinstance(self.mode_switch, FixedModes):
            return self.mode_switch.n_pl_initial
        return 0

    @property
    def n_dr(self) -> int:
        return self.n_agents - self.n_pl

    def with_changes(self, **changes) -> "SwarmParams":
        return replace(self, **changes)


# =============================================================================
# DISORIENTATION AND PRODUCTIVITY
# =============================================================================

def disorientation(error_magnitude: float, params: DisorientationParams) -> float:
    """
    Map a localization error magnitude to gamma = 1 - exp(-|dp| / dp0).

    Raises:
        DomainError: If error_magnitude is negative
    """
    if error_magnitude < 0:
        raise DomainError(f"error magnitude must be >= 0, got {error_magnitude}")
    return -math.expm1(-error_magnitude / params.delta_p0)


def lost_error_threshold(params: DisorientationParams) -> float:
    """Error magnitude at which gamma reaches gamma_thresh."""
    return -params.delta_p0 * math.log1p(-params.gamma_thresh)


def is_lost(gamma: float, params: DisorientationParams) -> bool:
    # boundary counts as not lost
    return gamma > params.gamma_thresh


def productivity(mode: AgentMode, gamma: float, params: DisorientationParams) -> int:
    """Step productivity: 1 only for a dead reckoner that is not lost."""
    if mode is AgentMode.DR_NOTLOST and not is_lost(gamma, params):
        return 1
    return 0


# =============================================================================
# PAIRWISE CORRECTION
# =============================================================================

@dataclass(frozen=True)
class PoseCorrection:
    """Absolute PL position and the measured relative offset to the DR."""
    p_pl: Tuple[float, float, float]
    p_rel: Tuple[float, float, float]

    def corrected_position(self) -> np.ndarray:
        return np.asarray(self.p_pl, dtype=float) + np.asarray(self.p_rel, dtype=float)


@dataclass(frozen=True)
class CorrectionResult:
    """Outcome of a DR meeting a partner. applied=False means Unchanged."""
    applied: bool
    mode: AgentMode
    error_magnitude: float
    position: Optional[np.ndarray] = None


def apply_correction(dr_mode: AgentMode, dr_error: float, partner_mode: AgentMode,
                     correction: Optional[PoseCorrection] = None,
                     smart: bool = False) -> CorrectionResult:
    """
    Apply the p_DR = p_PL + p_rel rule to a dead reckoner.

    Args:
        dr_mode: Mode of the agent being corrected
        dr_error: Its current error magnitude
        partner_mode: Mode of the other agent
        correction: Optional pose data; when given the corrected position is returned
        smart: Also correct dead reckoners that are not yet lost

    Returns:
        CorrectionResult; applied is False when the pair cannot correct
    """
    unchanged = CorrectionResult(False, dr_mode, dr_error)
    if not dr_mode.is_dead_reckoner or not partner_mode.can_assist:
        return unchanged
    if dr_mode is AgentMode.DR_NOTLOST and not smart:
        return unchanged

    new_mode = dr_mode
    if dr_mode is AgentMode.DR_LOST:
        new_mode = transition(dr_mode, AgentMode.DR_NOTLOST)
    position = correction.corrected_position() if correction is not None else None
    return CorrectionResult(True, new_mode, 0.0, position)


def is_effective_pair(mode_a: AgentMode, mode_b: AgentMode) -> bool:
    """A dead reckoner meeting a PL or PL_DAGGER counts toward the effective rate."""
    localizing = (AgentMode.PL, AgentMode.PL_DAGGER)
    return ((mode_a.is_dead_reckoner and mode_b in localizing)
            or (mode_b.is_dead_reckoner and mode_a in localizing))


def occupancy_counts(modes: Sequence[AgentMode]) -> Tuple[int, int, int, int]:
    counts = [0, 0, 0, 0]
    for mode in modes:
        counts[mode.index] += 1
    return tuple(counts)


@dataclass(frozen=True)
class InteractionEvent:
    """A logged pairwise meeting; ids are stored in canonical order id_a < id_b."""
    t: float
    id_a: int
    id_b: int
    effective: bool

    def __post_init__(self):
        if not self.id_a < self.id_b:
            raise ConfigError(f"interaction ids must satisfy id_a < id_b, got "
                              f"({self.id_a}, {self.id_b})", field="id_a")

    @classmethod
    def between(cls, t: float, a: int, b: int, effective: bool) -> "InteractionEvent":
        low, high = (a, b) if a < b else (b, a)
        return cls(t, low, high, effective)
