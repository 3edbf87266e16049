# Copyright 2024
# Directory: fedgw-sim/app/services/channel.py

"""
Channel Service - Indoor Propagation, Frame Errors and Rate Adaptation.

Provides:
- path_loss / snr_db: ITU-R P.1238 style indoor path loss with wall attenuation
- bit_error_rate / packet_error_rate: closed-form AWGN BER per modulation,
  independent bit errors across the frame
- rate_for_snr / in_range: highest usable rate for a frozen link SNR
- aarf_on_tx_result: Adaptive ARF state machine on LinkState
- visibility_fraction: share of gateways a station can reach at the lowest rate

Rates are bit/s, SNRs dB, lengths bits.
"""

import logging
import math
from functools import lru_cache
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import erfc

from ..schemas.entities import ALL_RATES, ChannelParams, LinkState

logger = logging.getLogger(__name__)

# MPDU length used for rate selection and range checks (1500 B payload + MAC header)
REFERENCE_LENGTH = 12272

# AARF constants
AARF_BASE_THRESHOLD = 10
AARF_MAX_THRESHOLD = 50
AARF_FAILURES_TO_FALLBACK = 2

OFDM_BANDWIDTH = 20e6
DSSS_BANDWIDTH = 22e6


class UnsupportedRateError(ValueError):
    """Raised for a data rate outside the 802.11b/g rate set."""


# rate -> (modulation, constellation size M, occupied bandwidth)
MODULATIONS: Dict[float, Tuple[str, int, float]] = {
    1e6: ("dbpsk", 2, DSSS_BANDWIDTH),
    2e6: ("dqpsk", 4, DSSS_BANDWIDTH),
    5.5e6: ("cck", 4, DSSS_BANDWIDTH),
    11e6: ("cck", 4, DSSS_BANDWIDTH),
    6e6: ("bpsk", 2, OFDM_BANDWIDTH),
    9e6: ("bpsk", 2, OFDM_BANDWIDTH),
    12e6: ("qpsk", 4, OFDM_BANDWIDTH),
    18e6: ("qpsk", 4, OFDM_BANDWIDTH),
    24e6: ("qam", 16, OFDM_BANDWIDTH),
    36e6: ("qam", 16, OFDM_BANDWIDTH),
    48e6: ("qam", 64, OFDM_BANDWIDTH),
    54e6: ("qam", 64, OFDM_BANDWIDTH),
}


# =============================================================================
# Propagation
# =============================================================================

def path_loss(
    distance: float,
    walls: int,
    params: ChannelParams,
    shadowing_db: float = 0.0,
) -> float:
    """
    Indoor path loss in dB.

    L = 20 log10(f_MHz) + N log10(d) + walls * L_wall - 28 + shadowing

    Args:
        distance: Link distance (m), > 0
        walls: Number of walls crossed
        params: Channel parameters
        shadowing_db: Frozen log-normal shadowing term for this link

    Returns:
        Path loss (dB)
    """
    if distance <= 0:
        raise ValueError(f"distance must be positive, got {distance}")
    return (
        20.0 * math.log10(params.carrier_freq_mhz)
        + params.distance_coefficient * math.log10(distance)
        + walls * params.wall_loss_db
        - 28.0
        + shadowing_db
    )


def snr_db(distance: float, walls: int, params: ChannelParams, shadowing_db: float = 0.0) -> float:
    """Received SNR: tx power minus path loss minus the noise floor."""
    return params.tx_power_dbm - path_loss(distance, walls, params, shadowing_db) - params.noise_floor_dbm


def draw_shadowing(params: ChannelParams, rng: np.random.Generator) -> float:
    """One frozen shadowing sample (dB); 0 when shadowing is disabled."""
    if params.shadowing_std_db <= 0:
        return 0.0
    return float(rng.normal(0.0, params.shadowing_std_db))


# =============================================================================
# Error model
# =============================================================================

def q_function(x: float) -> float:
    """Gaussian tail probability Q(x)."""
    return float(0.5 * erfc(x / math.sqrt(2.0)))


def bit_error_rate(snr: float, rate: float) -> float:
    """
    AWGN bit error probability for the modulation used at `rate`.

    Eb/N0 is the SNR scaled by bandwidth / rate.

    Raises:
        UnsupportedRateError: If the rate is not an 802.11b/g rate
    """
    if rate not in MODULATIONS:
        raise UnsupportedRateError(f"unsupported data rate {rate}")
    scheme, m, bandwidth = MODULATIONS[rate]
    ebn0 = 10.0 ** (snr / 10.0) * bandwidth / rate

    if scheme == "dbpsk":
        return 0.5 * math.exp(-ebn0)
    if scheme in ("bpsk", "qpsk", "dqpsk", "cck"):
        return q_function(math.sqrt(2.0 * ebn0))
    k = math.log2(m)
    return (4.0 / k) * (1.0 - 1.0 / math.sqrt(m)) * q_function(math.sqrt(3.0 * k * ebn0 / (m - 1)))


@lru_cache(maxsize=16384)
def packet_error_rate(snr: float, rate: float, length: float) -> float:
    """
    Probability that a frame of `length` bits contains at least one bit error.

    Args:
        snr: Link SNR (dB)
        rate: Data rate (bit/s)
        length: Frame length (bits), > 0

    Returns:
        PER = 1 - (1 - BER)^length, in [0, 1]

    Raises:
        UnsupportedRateError: If the rate is not an 802.11b/g rate
    """
    if length <= 0:
        raise ValueError(f"length must be positive, got {length}")
    ber = min(bit_error_rate(snr, rate), 0.5)
    if ber <= 0.0:
        return 0.0
    return min(1.0, max(0.0, -math.expm1(length * math.log1p(-ber))))


def rate_for_snr(
    snr: float,
    length: float = REFERENCE_LENGTH,
    per_target: float = 0.1,
    rates: Sequence[float] = ALL_RATES,
) -> Optional[float]:
    """
    Highest rate whose PER at `length` does not exceed `per_target`.

    Returns:
        The rate (bit/s), or None when even the lowest rate is unusable
    """
    best = None
    for rate in sorted(rates):
        if packet_error_rate(snr, rate, length) <= per_target:
            best = rate
    return best


def in_range(
    snr: float,
    length: float = REFERENCE_LENGTH,
    per_target: float = 0.1,
    rates: Sequence[float] = ALL_RATES,
) -> bool:
    """True when the lowest rate of the set is usable on the link."""
    return packet_error_rate(snr, min(rates), length) <= per_target


def visibility_fraction(snr_matrix: Iterable[Iterable[float]], per_target: float = 0.1) -> float:
    """
    Average fraction of gateways each station can reach at the lowest rate.

    Args:
        snr_matrix: One row per station, one SNR (dB) per gateway
        per_target: PER a usable link must not exceed

    Returns:
        Mean over stations of (reachable gateways / all gateways)
    """
    fractions = []
    for row in snr_matrix:
        row = list(row)
        if row:
            fractions.append(sum(in_range(s, per_target=per_target) for s in row) / len(row))
    return float(np.mean(fractions)) if fractions else 0.0


# =============================================================================
# Rate adaptation (AARF)
# =============================================================================

def new_link(
    distance: float,
    wall_count: int,
    snr: float,
    rate_set: Sequence[float] = ALL_RATES,
    per_target: float = 0.1,
) -> LinkState:
    """Link starting at the highest usable rate (the lowest if none is usable)."""
    rates = tuple(sorted(rate_set))
    rate = rate_for_snr(snr, per_target=per_target, rates=rates) or rates[0]
    return LinkState(distance=distance, wall_count=wall_count, snr=snr, current_rate=rate, rate_set=rates)


def aarf_update(link: LinkState, success: bool) -> LinkState:
    """In-place AARF transition; returns the same LinkState."""
    rates = link.rate_set
    index = rates.index(link.current_rate)

    if success:
        link.failure_count = 0
        if link.probe_pending:
            link.probe_pending = False
            link.probe_fallback_rate = None
            link.success_threshold = AARF_BASE_THRESHOLD
            link.success_count = 0
            return link
        link.success_count += 1
        if link.success_count >= link.success_threshold and index + 1 < len(rates):
            link.probe_fallback_rate = link.current_rate
            link.current_rate = rates[index + 1]
            link.probe_pending = True
            link.success_count = 0
        return link

    link.success_count = 0
    if link.probe_pending:
        link.current_rate = link.probe_fallback_rate
        link.probe_pending = False
        link.probe_fallback_rate = None
        link.success_threshold = min(2 * link.success_threshold, AARF_MAX_THRESHOLD)
        link.failure_count = 0
        return link

    link.failure_count += 1
    if link.failure_count >= AARF_FAILURES_TO_FALLBACK:
        link.failure_count = 0
        link.success_threshold = AARF_BASE_THRESHOLD
        if index > 0:
            link.current_rate = rates[index - 1]
    return link


def aarf_on_tx_result(link: LinkState, success: bool) -> LinkState:
    """
    AARF transition after one transmission attempt.

    Args:
        link: Current link state (left untouched)
        success: Whether the attempt was acknowledged

    Returns:
        The next link state
    """
    return aarf_update(link.model_copy(), success)
