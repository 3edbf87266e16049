# Copyright 2024
# Directory: fedgw-sim/app/services/dcf_montecarlo.py

"""
Slot-level DCF Simulator - Monte Carlo Reference for the Saturation Model.

Simulates N saturated nodes contending with binary exponential backoff:
- counters drawn uniformly in [0, W_i - 1], W_i = 2^min(i, m) W
- idle stretches are skipped in one step (every counter drops by the minimum)
- a busy slot decrements every non-transmitting counter once
- a lone transmission fails with probability p_e, several transmissions collide

Used by tests and devtools to check saturation_throughput; it is not on the
simulation engine's path.
"""

import logging

import numpy as np
from pydantic import BaseModel, Field

from ..schemas.entities import CycleStats, MacParams
from .mac_model import frame_durations

logger = logging.getLogger(__name__)

_BUFFER = 1 << 16


class MonteCarloResult(BaseModel):
    """Outcome of a slot-level DCF run."""
    throughput: float = Field(..., ge=0, description="Delivered payload bit/s")
    slots: int = Field(..., ge=0, description="Virtual slots simulated (idle + busy)")
    collision_fraction: float = Field(..., ge=0, le=1, description="Busy slots that were collisions")
    failure_probability: float = Field(..., ge=0, le=1, description="Failed attempts / attempts")
    attempts: int = Field(..., ge=0)


class _Uniforms:
    """Buffered uniform draws from one numpy Generator."""

    def __init__(self, seed: int):
        self.rng = np.random.default_rng(seed)
        self.buffer = self.rng.random(_BUFFER).tolist()
        self.index = 0

    def next(self) -> float:
        if self.index == _BUFFER:
            self.buffer = self.rng.random(_BUFFER).tolist()
            self.index = 0
        value = self.buffer[self.index]
        self.index += 1
        return value


def simulate_dcf(
    n_nodes: int,
    payload_bits: float,
    rate: float,
    p_e: float,
    mac: MacParams,
    slots: int = 1_000_000,
    seed: int = 0,
    exact_collisions: bool = True,
) -> MonteCarloResult:
    """
    Run a saturated DCF for at least `slots` virtual slots.

    Args:
        n_nodes: Number of saturated nodes
        payload_bits: Payload of every frame (bits)
        rate: Data rate of every frame (bit/s)
        p_e: Probability a lone transmission is received in error
        mac: MAC parameters
        slots: Minimum number of virtual slots to simulate
        seed: RNG seed
        exact_collisions: Collisions last as long as an erroneous frame of the
            same payload (uniform payloads make this the exact duration)

    Returns:
        MonteCarloResult
    """
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")

    stats = CycleStats(
        n_active=n_nodes, cycle_duration=1.0, avg_payload=payload_bits,
        max_payload=payload_bits, avg_rate=rate, filtered_per=0.0,
    )
    t_s, t_e, t_c = frame_durations(stats, mac, exact_collisions=exact_collisions)
    sigma = mac.slot_time
    windows = [mac.cw_min * 2 ** min(i, mac.backoff_stages) for i in range(mac.backoff_stages + 1)]
    last_stage = mac.backoff_stages

    uniforms = _Uniforms(seed)
    stages = [0] * n_nodes
    counters = [int(uniforms.next() * windows[0]) for _ in range(n_nodes)]

    elapsed = 0.0
    simulated = 0
    successes = 0
    collisions = 0
    busy = 0
    attempts = 0
    failures = 0

    while simulated < slots:
        lowest = min(counters)
        if lowest > 0:
            simulated += lowest
            elapsed += lowest * sigma
            counters = [c - lowest for c in counters]

        transmitters = [k for k, c in enumerate(counters) if c == 0]
        simulated += 1
        busy += 1
        attempts += len(transmitters)
        if len(transmitters) == 1:
            if uniforms.next() < p_e:
                elapsed += t_e
                failed = True
            else:
                elapsed += t_s
                successes += 1
                failed = False
        else:
            elapsed += t_c
            collisions += 1
            failed = True

        counters = [c - 1 if c > 0 else 0 for c in counters]
        for k in transmitters:
            if failed:
                failures += 1
                stages[k] = min(stages[k] + 1, last_stage)
            else:
                stages[k] = 0
            counters[k] = int(uniforms.next() * windows[stages[k]])

    throughput = successes * payload_bits / elapsed if elapsed > 0 else 0.0
    logger.debug(f"DCF Monte Carlo N={n_nodes}: {simulated} slots, S={throughput / 1e6:.3f} Mbit/s")
    return MonteCarloResult(
        throughput=throughput,
        slots=simulated,
        collision_fraction=collisions / busy if busy else 0.0,
        failure_probability=failures / attempts if attempts else 0.0,
        attempts=attempts,
    )
