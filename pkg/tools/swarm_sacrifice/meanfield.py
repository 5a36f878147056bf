"""
Mean-field analytics for the three operating regimes.

Occupancy vectors are ordered (n_DR_NotLost, n_DR_Lost, n_PL_dagger, n_PL),
the same order as core.MODE_ORDER. Every right-hand side conserves the total
agent count, so the component sum of each derivative is identically zero.

## Quick Reference

    params = SwarmParams(n_agents=30, r_lost=0.04, r_int=10, mode_switch=FixedModes(5))
    steady_state_fixed(params).productivity_per_agent      # ~0.6182
    optimal_pl_fraction(params)                            # ~0.1897
    traj = integrate(rhs_fixed, initial_state(params), params, t_end=1e4, dt=0.1)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import minimize_scalar

from .core import CollaborativeSwitching, FixedModes, IndividualSwitching, SwarmParams
from .errors import ConsistencyError, DomainError, IntegrationError, PreconditionError

logger = logging.getLogger(__name__)

# Steady state is declared once the derivative is this small.
STEADY_TOL = 1e-10
DEFAULT_T_END = 1e4
ROOT_TOL = 1e-8
FD_STEP = 1e-6


# =============================================================================
# TYPES
# =============================================================================

@dataclass(frozen=True)
class OccupancyVector:
    """Mean number of agents per mode; continuous in the mean field."""
    n_dr_notlost: float
    n_dr_lost: float
    n_pl_dagger: float
    n_pl: float

    @property
    def total(self) -> float:
        return self.n_dr_notlost + self.n_dr_lost + self.n_pl_dagger + self.n_pl

    def as_array(self) -> np.ndarray:
        return np.array([self.n_dr_notlost, self.n_dr_lost, self.n_pl_dagger, self.n_pl],
                        dtype=float)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "OccupancyVector":
        a, b, c, d = (float(v) for v in values)
        return cls(a, b, c, d)


StateLike = Union[OccupancyVector, np.ndarray, Sequence[float]]
Rhs = Callable[..., np.ndarray]


@dataclass(frozen=True)
class StabilityResult:
    stable: bool
    eigenvalues: Tuple[complex, ...]
    routh_hurwitz: Optional[bool]
    evidence: str


@dataclass(frozen=True)
class SteadyStateReport:
    occupancy: OccupancyVector
    productivity_per_agent: float
    stable: bool
    eigen_or_rh_evidence: str
    degenerate: bool = False


@dataclass(frozen=True)
class Trajectory:
    """Integrated time series; states has one row per recorded time."""
    times: np.ndarray
    states: np.ndarray
    converged: bool

    @property
    def final(self) -> OccupancyVector:
        return OccupancyVector.from_array(self.states[-1])

    def productivity(self, n_agents: float) -> float:
        return float(self.states[-1, 0] / n_agents)


def _as_array(state: StateLike) -> np.ndarray:
    if isinstance(state, OccupancyVector):
        return state.as_array()
    return np.asarray(state, dtype=float)


def _pair_rate(params: SwarmParams) -> float:
    """Per-pair meeting rate 2 r_int / (N (N - 1))."""
    n = params.n_agents
    if n < 2:
        raise DomainError(f"pairwise interaction rate needs N >= 2, got N={n}")
    return 2.0 * params.r_int / (n * (n - 1))


def mode_switch_cap(tau_p: float) -> float:
    """Largest r_MS the adaptive rule may return (used when r_int = 0)."""
    return 1e3 / tau_p


# =============================================================================
# RIGHT-HAND SIDES
# =============================================================================

def rhs_fixed(state: StateLike, params: SwarmParams) -> np.ndarray:
    """Fixed roles: DRs get lost at r_L and recover only through PL meetings."""
    n = _as_array(state)
    recovery = _pair_rate(params) * n[3] * n[1]
    d_notlost = -params.r_lost * n[0] + recovery
    return np.array([d_notlost, -d_notlost, 0.0, 0.0])


def rhs_individual(state: StateLike, params: SwarmParams) -> np.ndarray:
    """
    Individual switching without interaction.

    DR_Lost and PL have zero residence: losses flow straight into PL_dagger and
    re-localized agents go straight back to DR_NotLost. Mass already sitting in
    those two states is left untouched.
    """
    n = _as_array(state)
    flow_out = params.r_lost * n[0]
    flow_back = params.r_p * n[2]
    return np.array([flow_back - flow_out, 0.0, flow_out - flow_back, 0.0])


def rhs_collaborative(state: StateLike, params: SwarmParams, r_ms: float) -> np.ndarray:
    """Superposition of fixed-mode recovery and rate-r_ms mode switching."""
    if r_ms < 0:
        raise DomainError(f"r_ms must be >= 0, got {r_ms}")
    n = _as_array(state)
    recovery = _pair_rate(params) * n[3] * n[1]
    d_lost = params.r_lost * n[0] - r_ms * n[1] - recovery
    d_dagger = r_ms * n[1] - params.r_p * n[2]
    d_pl = params.r_p * n[2] - r_ms * n[3]
    return np.array([-(d_lost + d_dagger + d_pl), d_lost, d_dagger, d_pl])


def adaptive_mode_switch_rate(r_int: float, alpha: float,
                              r_ms_max: Optional[float] = None) -> float:
    """
    Adaptive rule r_MS = alpha / r_int.

    Args:
        r_int: Pairwise interaction rate
        alpha: Sensitivity constant (> 0)
        r_ms_max: Rate returned when r_int is 0

    Raises:
        DomainError: If r_int is 0 and no cap was given
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be > 0, got {alpha}")
    if r_int < 0:
        raise DomainError(f"r_int must be >= 0, got {r_int}")
    if r_int == 0:
        if r_ms_max is None:
            raise DomainError("r_int = 0 needs an r_ms_max cap")
        return r_ms_max
    return alpha / r_int


def resolve_mode_switch_rate(params: SwarmParams) -> float:
    """The r_MS implied by a collaborative configuration."""
    mode = params.mode_switch
    if not isinstance(mode, CollaborativeSwitching):
        raise DomainError(f"{mode.kind} mode has no mode-switch rate")
    if mode.r_ms is not None:
        return mode.r_ms
    alpha = mode.alpha if mode.alpha is not None else 1.0
    return adaptive_mode_switch_rate(params.r_int, alpha, mode_switch_cap(params.tau_p))


# =============================================================================
# INTEGRATION
# =============================================================================

def initial_state(params: SwarmParams) -> OccupancyVector:
    """All non-PL agents start as productive dead reckoners."""
    return OccupancyVector(float(params.n_dr), 0.0, 0.0, float(params.n_pl))


def integrate(rhs: Rhs, initial: StateLike, params: SwarmParams, t_end: float = DEFAULT_T_END,
              dt: float = 0.01, rhs_args: Tuple = (), steady_tol: Optional[float] = STEADY_TOL,
              record_every: int = 1) -> Trajectory:
    """
    Fixed-step fourth-order Runge-Kutta.

    Args:
        rhs: f(state, params, *rhs_args) -> derivative
        initial: Starting occupancy
        params: Swarm parameters passed through to rhs
        t_end: Final time
        dt: Step size
        rhs_args: Extra positional arguments for rhs (e.g. r_ms)
        steady_tol: Stop early once ||rhs||_inf drops below this (None disables)
        record_every: Keep every k-th state in the returned series

    Returns:
        Trajectory; the last row is always the final state

    Raises:
        IntegrationError: On a non-finite state
    """
    if not dt > 0:
        raise DomainError(f"dt must be > 0, got {dt}")
    if t_end < dt:
        raise DomainError(f"t_end must be >= dt, got t_end={t_end}, dt={dt}")

    n_steps = int(round(t_end / dt))
    y = _as_array(initial).copy()
    times: List[float] = [0.0]
    states: List[np.ndarray] = [y.copy()]
    converged = False
    half = 0.5 * dt

    step = 0
    for step in range(1, n_steps + 1):
        k1 = rhs(y, params, *rhs_args)
        if steady_tol is not None and np.max(np.abs(k1)) < steady_tol:
            converged = True
            step -= 1
            break
        k2 = rhs(y + half * k1, params, *rhs_args)
        k3 = rhs(y + half * k2, params, *rhs_args)
        k4 = rhs(y + dt * k3, params, *rhs_args)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationError("non-finite state", step)
        if step % record_every == 0:
            times.append(step * dt)
            states.append(y.copy())

    if times[-1] != step * dt:
        times.append(step * dt)
        states.append(y.copy())
    logger.debug("integrated %d steps (converged=%s)", step, converged)
    return Trajectory(np.array(times), np.vstack(states), converged)


# =============================================================================
# STABILITY
# =============================================================================

def numerical_jacobian(rhs: Rhs, point: np.ndarray, params: SwarmParams,
                       rhs_args: Tuple = (), rel_step: float = FD_STEP) -> np.ndarray:
    """Central finite differences with a relative step per coordinate."""
    size = point.size
    jac = np.zeros((size, size))
    for j in range(size):
        h = rel_step * max(1.0, abs(point[j]))
        up = point.copy()
        down = point.copy()
        up[j] += h
        down[j] -= h
        jac[:, j] = (rhs(up, params, *rhs_args) - rhs(down, params, *rhs_args)) / (2.0 * h)
    return jac


def routh_hurwitz(coefficients: Sequence[float]) -> bool:
    """
    Routh array test for a real polynomial, highest power first.

    Returns True iff every root has a negative real part. A zero in the first
    column counts as not stable.
    """
    coeffs = [float(c) for c in coefficients]
    if coeffs[0] < 0:
        coeffs = [-c for c in coeffs]
    degree = len(coeffs) - 1
    if degree == 0:
        return True
    width = degree // 2 + 1
    rows = [
        coeffs[0::2] + [0.0] * (width - len(coeffs[0::2])),
        coeffs[1::2] + [0.0] * (width - len(coeffs[1::2])),
    ]
    for _ in range(degree - 1):
        upper, lower = rows[-2], rows[-1]
        if lower[0] == 0:
            return False
        new = [
            (lower[0] * upper[i + 1] - upper[0] * lower[i + 1]) / lower[0]
            for i in range(width - 1)
        ] + [0.0]
        rows.append(new)
    return all(row[0] > 0 for row in rows[: degree + 1])


def stability_check(rhs: Rhs, steady: StateLike, params: SwarmParams, rhs_args: Tuple = (),
                    root_tol: float = ROOT_TOL) -> StabilityResult:
    """
    Linear stability of an equilibrium.

    Coordinates whose Jacobian row vanishes identically are frozen by the
    regime and dropped; for conservative systems the remainder is projected
    onto the sum-zero hyperplane so the conserved direction does not show up
    as a zero eigenvalue. Stable iff every reduced eigenvalue has a negative
    real part and the Routh-Hurwitz test on the characteristic polynomial
    agrees.

    Raises:
        PreconditionError: If steady is not a root of rhs
    """
    point = _as_array(steady)
    residual = float(np.max(np.abs(rhs(point, params, *rhs_args))))
    if residual > root_tol:
        raise PreconditionError(f"not an equilibrium: ||rhs|| = {residual:.3e} > {root_tol:g}")

    jac = numerical_jacobian(rhs, point, params, rhs_args)
    scale = max(1.0, float(np.max(np.abs(jac))))
    active = np.flatnonzero(np.max(np.abs(jac), axis=1) > 1e-12 * scale)
    if active.size == 0:
        return StabilityResult(False, (), None, "jacobian vanishes: marginal")
    reduced = jac[np.ix_(active, active)]

    conservative = np.allclose(np.ones(active.size) @ reduced, 0.0, atol=1e-7 * scale)
    if conservative:
        if active.size == 1:
            return StabilityResult(False, (0j,), None, "single conserved coordinate: marginal")
        basis = null_space(np.ones((1, active.size)))
        reduced = basis.T @ reduced @ basis

    eigenvalues = tuple(complex(v) for v in np.linalg.eigvals(reduced))
    eig_stable = all(v.real < 0 for v in eigenvalues)
    rh_stable = routh_hurwitz(np.real(np.poly(reduced)))

    stable = eig_stable and rh_stable
    spectrum = ", ".join(f"{v.real:.4g}{v.imag:+.4g}j" for v in eigenvalues)
    evidence = (f"dim={len(eigenvalues)} eigenvalues=[{spectrum}] "
                f"eigen_test={'stable' if eig_stable else 'unstable'} "
                f"routh_hurwitz={'stable' if rh_stable else 'unstable'}")
    if eig_stable != rh_stable:
        logger.warning("eigenvalue and Routh-Hurwitz tests disagree: %s", evidence)
        evidence += " (tests disagree)"
    return StabilityResult(stable, eigenvalues, rh_stable, evidence)


# =============================================================================
# CLOSED-FORM STEADY STATES
# =============================================================================

def fixed_productivity(fraction, n_agents: int, r_lost: float, r_int: float):
    """
    Steady productivity per agent for a PL fraction (numpy-broadcastable).

    Fractions of 0 or 1, and r_int = 0, give 0.
    """
    frac = np.asarray(fraction, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if r_int > 0:
            loss_ratio = r_lost * (n_agents - 1) / (2.0 * r_int)
            value = (1.0 - frac) / (1.0 + loss_ratio / frac)
        else:
            value = np.zeros_like(frac)
    value = np.where((frac > 0) & (frac < 1), value, 0.0)
    if r_lost == 0 and r_int > 0:
        value = np.where((frac > 0) & (frac < 1), 1.0 - frac, 0.0)
    return float(value) if value.ndim == 0 else value


def steady_state_fixed(params: SwarmParams) -> SteadyStateReport:
    """Fixed-mode equilibrium, checked for stability on the Jacobian."""
    n = params.n_agents
    _pair_rate(params)
    n_pl = params.n_pl
    n_dr = n - n_pl

    if n_pl == 0 or n_pl == n or params.r_int == 0:
        occupancy = OccupancyVector(0.0, float(n_dr), 0.0, float(n_pl))
        if params.r_lost == 0:
            occupancy = OccupancyVector(float(n_dr), 0.0, 0.0, float(n_pl))
        prod = occupancy.n_dr_notlost / n
        return SteadyStateReport(occupancy, prod, False,
                                 "degenerate: no recovery path or no dead reckoners", True)

    prod = fixed_productivity(n_pl / n, n, params.r_lost, params.r_int)
    notlost = prod * n
    occupancy = OccupancyVector(notlost, n_dr - notlost, 0.0, float(n_pl))
    check = stability_check(rhs_fixed, occupancy, params)
    return SteadyStateReport(occupancy, prod, check.stable, check.evidence)


def optimal_pl_fraction(params: SwarmParams) -> float:
    """PL fraction maximizing the fixed-mode steady productivity."""
    n = params.n_agents
    if n < 2:
        raise DomainError(f"optimal fraction needs N >= 2, got N={n}")
    if params.r_int <= 0:
        raise DomainError("optimal fraction needs r_int > 0")
    if params.r_lost <= 0:
        raise DomainError("optimal fraction needs r_lost > 0")
    ratio = params.r_lost * (n - 1) / (2.0 * params.r_int)
    # ratio * (sqrt(1 + 1/ratio) - 1), rewritten to avoid cancellation
    return 1.0 / (1.0 + math.sqrt(1.0 + 1.0 / ratio))


def steady_state_individual(params: SwarmParams) -> SteadyStateReport:
    """Individual switching: productivity r_p / (r_p + r_L), whatever r_int is."""
    n = params.n_agents
    r_p, r_l = params.r_p, params.r_lost
    if r_p + r_l == 0:
        occupancy = OccupancyVector(float(n), 0.0, 0.0, 0.0)
        return SteadyStateReport(occupancy, 1.0, False, "degenerate: r_p = r_L = 0", True)
    prod = r_p / (r_p + r_l)
    occupancy = OccupancyVector(prod * n, 0.0, (1.0 - prod) * n, 0.0)
    if r_l == 0:
        return SteadyStateReport(occupancy, prod, True, "no losses: all agents stay productive")
    check = stability_check(rhs_individual, occupancy, params)
    return SteadyStateReport(occupancy, prod, check.stable, check.evidence)


def collaborative_pl_count(params: SwarmParams, r_ms: float) -> float:
    """
    Positive root of a x^2 + b x - c = 0 with
    a = 2 r_int / (N (N - 1)), b = r_ms + r_L (2 + r_ms / r_p), c = r_L N.
    """
    n = params.n_agents
    a = _pair_rate(params)
    k = r_ms / params.r_p
    b = r_ms + params.r_lost * (2.0 + k)
    c = params.r_lost * n
    if c == 0:
        return 0.0
    disc = b * b + 4.0 * a * c
    # 2c / (b + sqrt(disc)) is the positive root and stays exact when a -> 0
    return 2.0 * c / (b + math.sqrt(disc))


def steady_state_collaborative(params: SwarmParams, r_ms: float) -> SteadyStateReport:
    """
    Collaborative switching equilibrium.

    At rest n_PL_dagger = (r_ms / r_p) n_PL and n_Lost = n_PL, so
    productivity = 1 - (2 + r_ms / r_p) n_PL / N.

    Raises:
        DomainError: If r_ms <= 0
        ConsistencyError: If the root falls outside [0, N / (2 + r_ms / r_p)]
    """
    if not r_ms > 0:
        raise DomainError(f"collaborative steady state needs r_ms > 0, got {r_ms}")
    n = params.n_agents
    k = r_ms / params.r_p
    n_pl = collaborative_pl_count(params, r_ms)
    upper = n / (2.0 + k)
    if not 0.0 <= n_pl <= upper * (1.0 + 1e-12):
        raise ConsistencyError(f"PL root {n_pl} outside [0, {upper}]")

    occupancy = OccupancyVector(n - (2.0 + k) * n_pl, n_pl, k * n_pl, n_pl)
    prod = occupancy.n_dr_notlost / n
    check = stability_check(rhs_collaborative, occupancy, params, rhs_args=(r_ms,),
                            root_tol=ROOT_TOL * max(1.0, r_ms))
    return SteadyStateReport(occupancy, prod, check.stable, check.evidence)


def best_mode_switch_rate(params: SwarmParams,
                          bounds: Tuple[float, float] = (1e-6, 1e3)) -> Tuple[float, float]:
    """
    Constant r_MS that maximizes the collaborative steady productivity.

    Returns:
        (r_ms, productivity)
    """
    def negative(log_rate: float) -> float:
        r_ms = 10.0 ** log_rate
        return -steady_state_collaborative_value(params, r_ms)

    result = minimize_scalar(negative, bounds=(math.log10(bounds[0]), math.log10(bounds[1])),
                             method="bounded", options={"xatol": 1e-6})
    r_ms = 10.0 ** float(result.x)
    return r_ms, -float(result.fun)


def steady_state_collaborative_value(params: SwarmParams, r_ms: float) -> float:
    """Productivity only, without the stability check."""
    n_pl = collaborative_pl_count(params, r_ms)
    return 1.0 - (2.0 + r_ms / params.r_p) * n_pl / params.n_agents


# =============================================================================
# CURVES
# =============================================================================

@dataclass(frozen=True)
class MeanFieldRow:
    """One sweep row; n_pl_or_alpha holds N_PL (fixed) or alpha (adaptive)."""
    regime: str
    N: int
    r_L: float
    r_int: float
    n_pl_or_alpha: float
    r_ms: float
    productivity: float
    stable: bool


def meanfield_curves(base: SwarmParams, r_int_values: Iterable[float],
                     n_pl_values: Iterable[int] = (), alpha: float = 0.01,
                     include_best: bool = False) -> List[MeanFieldRow]:
    """
    Productivity rows per r_int: one fixed-mode curve per N_PL, then the
    fixed-optimal curve, the individual line and the adaptive curve.
    """
    rows: List[MeanFieldRow] = []
    n = base.n_agents
    r_int_values = list(r_int_values)

    for n_pl in n_pl_values:
        for r_int in r_int_values:
            params = base.with_changes(r_int=r_int, mode_switch=FixedModes(n_pl))
            report = steady_state_fixed(params)
            rows.append(MeanFieldRow("fixed", n, base.r_lost, r_int, n_pl, 0.0,
                                     report.productivity_per_agent, report.stable))

    for r_int in r_int_values:
        params = base.with_changes(r_int=r_int)
        fraction = optimal_pl_fraction(params)
        prod = fixed_productivity(fraction, n, base.r_lost, r_int)
        rows.append(MeanFieldRow("fixed_optimal", n, base.r_lost, r_int, fraction * n, 0.0,
                                 prod, True))

        individual = steady_state_individual(params.with_changes(mode_switch=IndividualSwitching()))
        rows.append(MeanFieldRow("individual", n, base.r_lost, r_int, 0.0, math.inf,
                                 individual.productivity_per_agent, individual.stable))

        r_ms = adaptive_mode_switch_rate(r_int, alpha, mode_switch_cap(base.tau_p))
        adaptive = steady_state_collaborative(params, r_ms)
        rows.append(MeanFieldRow("collaborative", n, base.r_lost, r_int, alpha, r_ms,
                                 adaptive.productivity_per_agent, adaptive.stable))

        if include_best:
            best_rate, best_prod = best_mode_switch_rate(params)
            rows.append(MeanFieldRow("collaborative_best", n, base.r_lost, r_int, 0.0, best_rate,
                                     best_prod, True))
    return rows
