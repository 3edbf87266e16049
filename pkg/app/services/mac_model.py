# Copyright 2024
# Directory: fedgw-sim/app/services/mac_model.py

"""
Saturation Model - Analytic 802.11 DCF Throughput with Channel Errors.

Bianchi's saturation model extended with a frame error probability p_e:
- backoff_tau / solve_fixed_point: access probability tau and failure probability p
- frame_durations: T_s, T_e and the worst-case collision time T_c
- event_weights / expected_event_time: the expected duration of a slot event
- saturation_throughput: aggregate S and per-node S_n for one cycle

All functions are pure; solve_fixed_point is memoised on its scalar inputs.
"""

import logging
import math
from functools import lru_cache
from typing import Tuple

from scipy.optimize import bisect

from ..schemas.entities import CycleStats, MacParams, SaturationResult

logger = logging.getLogger(__name__)

# Upper end of the bisection interval and convergence limits
P_UPPER = 1.0 - 1e-12
MAX_ITERATIONS = 200
RESIDUAL_TOLERANCE = 1e-10


class SolverError(RuntimeError):
    """The fixed point could not be found: the parameter regime is invalid."""


# =============================================================================
# Fixed point
# =============================================================================

def backoff_tau(p: float, cw_min: int, backoff_stages: int) -> float:
    """
    Per-slot transmission probability of a saturated node.

    tau(p) = 2(1-2p) / [(1-2p)(W+1) + pW(1-(2p)^m)], evaluated in a form that
    stays accurate around the removable singularity at p = 1/2, where
    tau = 2 / (W + 1 + mW/2).

    Args:
        p: Conditional failure probability in [0, 1)
        cw_min: Minimum contention window W
        backoff_stages: Number of backoff stages m

    Returns:
        tau in (0, 1]
    """
    w, m = cw_min, backoff_stages
    x = 1.0 - 2.0 * p
    if x == 0.0:
        return 2.0 / (w + 1 + m * w / 2.0)
    # 1 - (2p)^m = 1 - (1-x)^m
    one_minus_pow = -math.expm1(m * math.log1p(-x))
    return 2.0 * x / (x * (w + 1) + p * w * one_minus_pow)


@lru_cache(maxsize=65536)
def _solve(n_active: int, p_e: float, cw_min: int, backoff_stages: int) -> Tuple[float, float]:
    if n_active == 1:
        # No contention: failures are channel errors only
        return backoff_tau(p_e, cw_min, backoff_stages), p_e

    def residual(p: float) -> float:
        tau = backoff_tau(p, cw_min, backoff_stages)
        return p - (1.0 - (1.0 - tau) ** (n_active - 1) * (1.0 - p_e))

    if residual(0.0) >= 0.0:
        return backoff_tau(0.0, cw_min, backoff_stages), 0.0

    try:
        p, info = bisect(
            residual, 0.0, P_UPPER, xtol=1e-16, maxiter=MAX_ITERATIONS,
            full_output=True, disp=False,
        )
    except ValueError as e:
        raise SolverError(f"no sign change for N={n_active}, p_e={p_e}: {e}") from e

    error = abs(residual(p))
    if error >= RESIDUAL_TOLERANCE:
        raise SolverError(
            f"fixed point not found for N={n_active}, p_e={p_e} after "
            f"{info.iterations} iterations (residual {error:.3e})"
        )
    if info.iterations > MAX_ITERATIONS // 2:
        logger.warning(f"Fixed point for N={n_active}, p_e={p_e} took {info.iterations} iterations")
    return backoff_tau(p, cw_min, backoff_stages), p


def solve_fixed_point(n_active: int, p_e: float, mac: MacParams) -> Tuple[float, float]:
    """
    Solve the coupled (tau, p) system for N saturated nodes.

    p = 1 - (1-tau)^(N-1) (1-p_e) and tau = backoff_tau(p), found by bisection
    on p over [0, 1 - 1e-12].

    Args:
        n_active: Number of contending nodes N (>= 1)
        p_e: Frame error probability in [0, 1)
        mac: MAC parameters (W and m are used)

    Returns:
        (tau, p_cond)

    Raises:
        SolverError: If bisection does not reach a residual below 1e-10
    """
    if n_active < 1:
        raise ValueError(f"n_active must be >= 1, got {n_active}")
    if not 0.0 <= p_e < 1.0:
        raise ValueError(f"p_e must be in [0, 1), got {p_e}")
    return _solve(int(n_active), float(p_e), mac.cw_min, mac.backoff_stages)


# =============================================================================
# Event durations
# =============================================================================

def frame_durations(
    stats: CycleStats,
    mac: MacParams,
    exact_collisions: bool = False,
) -> Tuple[float, float, float]:
    """
    Durations of a successful, an erroneous and a colliding transmission.

    T_s = 2 h_phy/R_b + (h_mac + P + ACK)/R + SIFS + DIFS
    T_e = h_phy/R_b + (h_mac + P)/R + T_o + DIFS
    T_c = T_e with P replaced by P_max (worst case); with exact_collisions
    the average payload is used instead.

    Args:
        stats: Cycle aggregates (P, P_max, R)
        mac: MAC timing parameters
        exact_collisions: Use P instead of P_max in T_c

    Returns:
        (T_s, T_e, T_c) in seconds
    """
    phy = mac.phy_header_bits / mac.basic_rate
    rate = stats.avg_rate
    t_s = 2 * phy + (mac.mac_header_bits + stats.avg_payload + mac.ack_bits) / rate + mac.sifs + mac.difs
    t_e = phy + (mac.mac_header_bits + stats.avg_payload) / rate + mac.retransmission_timeout + mac.difs
    collided = stats.avg_payload if exact_collisions else stats.max_payload
    t_c = phy + (mac.mac_header_bits + collided) / rate + mac.retransmission_timeout + mac.difs
    return t_s, t_e, t_c


def event_weights(tau: float, p_e: float, n_active: int) -> Tuple[float, float, float, float]:
    """
    Probabilities of the four slot events: idle, success, collision, error.

    The collision weight is the complement of the other three, so the weights
    sum to one.
    """
    idle = (1.0 - tau) ** n_active
    single = n_active * tau * (1.0 - tau) ** (n_active - 1)
    collision = max(0.0, 1.0 - idle - single)
    return idle, single * (1.0 - p_e), collision, single * p_e


def expected_event_time(
    tau: float,
    p_e: float,
    n_active: int,
    durations: Tuple[float, float, float],
    mac: MacParams,
) -> float:
    """
    Average duration of a slot event E[T].

    Args:
        tau: Per-slot transmission probability
        p_e: Frame error probability
        n_active: Number of contending nodes
        durations: (T_s, T_e, T_c) from frame_durations
        mac: MAC parameters (slot time)

    Returns:
        E[T] in seconds
    """
    t_s, t_e, t_c = durations
    idle, success, collision, error = event_weights(tau, p_e, n_active)
    return idle * mac.slot_time + success * t_s + collision * t_c + error * t_e


# =============================================================================
# Saturation throughput
# =============================================================================

def saturation_throughput(
    stats: CycleStats,
    mac: MacParams,
    exact_collisions: bool = False,
) -> SaturationResult:
    """
    Aggregate and per-node saturation throughput for one cycle.

    S = N tau (1-tau)^(N-1) P (1-p_e) / E[T] and S_n = S / N.

    Args:
        stats: Cycle aggregates with n_active >= 1
        mac: MAC parameters
        exact_collisions: Use P instead of P_max in T_c

    Returns:
        SaturationResult

    Raises:
        SolverError: Propagated from solve_fixed_point
    """
    n = stats.n_active
    if n < 1:
        raise ValueError("saturation_throughput needs at least one active node")

    p_e = stats.filtered_per
    tau, p_cond = solve_fixed_point(n, p_e, mac)
    durations = frame_durations(stats, mac, exact_collisions=exact_collisions)
    e_t = expected_event_time(tau, p_e, n, durations, mac)
    _, success, _, _ = event_weights(tau, p_e, n)
    s = success * stats.avg_payload / e_t
    return SaturationResult(
        tau=tau,
        p_cond=p_cond,
        expected_event_time=e_t,
        aggregate_S=s,
        per_node_S=s / n,
    )


def single_node_capacity(stats: CycleStats, mac: MacParams) -> SaturationResult:
    """
    Saturation of a lone node with the cycle's payload, rate and p_e.

    Stands in for the model when no node was active, so an idle BSS reports
    its whole single-node capacity as available.
    """
    lone = stats.model_copy(update={"n_active": 1})
    return saturation_throughput(lone, mac)
