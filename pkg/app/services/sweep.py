# Copyright 2024
# Directory: fedgw-sim/app/services/sweep.py

"""
Sweep Service - Parameter Sweeps over a Base Scenario.

A sweep runs one independent simulation per (parameter value, population
variant, seed), each in its own worker process and its own run directory,
then merges the per-run rows:
- runs.csv: one row per run, sorted by key
- summary.csv: seed-averaged rows per (value, variant)

Every row is derived from the run's gateways.csv and assoc.csv at steady
state, so verify_sweep() can recompute the aggregation from the files alone.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel

from ..config.scenario_loader import ScenarioError, check_scenario, validate_and_load
from ..config.settings import Settings, get_settings
from ..schemas.results import RunManifest, SweepRow
from ..schemas.scenario import ScenarioConfig, SweepSpec
from ..simulation.engine import run_scenario
from ..simulation.metrics import read_manifest

logger = logging.getLogger(__name__)

RUNS_FILE = "runs.csv"
SUMMARY_FILE = "summary.csv"
RUNS_DIR = "runs"

GROUP_COLUMNS = ["value", "stations_per_gateway"]
SUMMARY_COLUMNS = ["off_fraction", "mean_stations_per_on", "final_on_count", "steady_state_time"]


class SweepJob(BaseModel):
    """One run of a sweep."""
    value: float
    stations_per_gateway: Optional[int] = None
    seed: int

    @property
    def key(self) -> str:
        variant = "base" if self.stations_per_gateway is None else f"n{self.stations_per_gateway}"
        return f"v{self.value:g}_{variant}_s{self.seed}"


class SweepResult(BaseModel):
    runs: List[SweepRow]
    out_dir: Optional[Path] = None


# =============================================================================
# Scenario variants
# =============================================================================

def set_dotted(data: Dict[str, Any], path: str, value: Any) -> None:
    """
    Set `value` at a dotted path; numeric parts index lists.

    Raises:
        ScenarioError: If a part of the path does not exist
    """
    parts = path.split(".")
    node: Any = data
    for i, part in enumerate(parts):
        last = i == len(parts) - 1
        try:
            if isinstance(node, list):
                index = int(part)
                if last:
                    node[index] = value
                else:
                    node = node[index]
            elif isinstance(node, dict) and part in node:
                if last:
                    node[part] = value
                else:
                    node = node[part]
            else:
                raise KeyError(part)
        except (KeyError, IndexError, ValueError) as e:
            raise ScenarioError("sweep", [(path, f"no such parameter ({'.'.join(parts[:i + 1])})")]) from e


def expand_jobs(spec: SweepSpec) -> List[SweepJob]:
    """Every (value, variant, seed) of the sweep, in key order."""
    variants: List[Optional[int]] = list(spec.stations_per_gateway) or [None]
    jobs = [
        SweepJob(value=value, stations_per_gateway=variant, seed=seed)
        for value in spec.values
        for variant in variants
        for seed in spec.seeds
    ]
    return sorted(jobs, key=lambda j: (j.value, -1 if j.stations_per_gateway is None else j.stations_per_gateway, j.seed))


def job_scenario(base: ScenarioConfig, spec: SweepSpec, job: SweepJob) -> ScenarioConfig:
    """
    The base scenario with the job's parameter value, population and seed.

    Raises:
        ScenarioError: If the parameter path is unknown or the variant is invalid
    """
    data = base.model_dump(mode="json")
    set_dotted(data, spec.parameter, job.value)
    if job.stations_per_gateway is not None:
        if data.get("population") is None:
            raise ScenarioError(spec.base, [("population", "stations_per_gateway variants need a population")])
        data["population"]["stations_per_gateway"] = job.stations_per_gateway
    data["seed"] = job.seed
    data["name"] = f"{base.name}-{job.key}"
    if spec.duration is not None:
        data["duration"] = spec.duration
    config = ScenarioConfig.model_validate(data)
    check_scenario(config, source=job.key)
    return config


# =============================================================================
# Rows from run files
# =============================================================================

def state_at(gateways: pd.DataFrame, assoc: pd.DataFrame, t: float) -> Tuple[List[str], Dict[str, int]]:
    """
    On gateways and their station counts at time t, from a run's timelines.

    Returns:
        (on gateway ids, on gateway -> associated stations)
    """
    timeline = gateways[gateways["time"] <= t].groupby("gateway", sort=True).tail(1)
    on = sorted(timeline.loc[timeline["state"] == "on", "gateway"].astype(str))
    latest = assoc[assoc["time"] <= t].groupby("station", sort=True).tail(1)
    counts = latest["to_gateway"].astype(str).value_counts()
    return on, {g: int(counts.get(g, 0)) for g in on}


def summarize_run(job: SweepJob, manifest: RunManifest, gateways: pd.DataFrame, assoc: pd.DataFrame) -> SweepRow:
    """The sweep row of one run, evaluated at its steady state (or its end)."""
    t = manifest.steady_state_time if manifest.steady_state_time is not None else manifest.duration
    on, counts = state_at(gateways, assoc, t)
    n = manifest.n_gateways
    return SweepRow(
        value=job.value,
        stations_per_gateway=job.stations_per_gateway,
        seed=job.seed,
        n_gateways=n,
        final_on_count=manifest.final_on_count,
        min_on_count=manifest.min_on_count,
        off_fraction=(n - len(on)) / n if n else 0.0,
        mean_stations_per_on=float(np.mean(list(counts.values()))) if counts else 0.0,
        steady_state_time=manifest.steady_state_time,
        messages=sum(manifest.message_counts.values()),
        invariant_violations=len(manifest.invariant_violations),
    )


def read_run(run_dir: Path) -> Tuple[RunManifest, pd.DataFrame, pd.DataFrame]:
    run_dir = Path(run_dir)
    return (
        read_manifest(run_dir),
        pd.read_csv(run_dir / "gateways.csv"),
        pd.read_csv(run_dir / "assoc.csv"),
    )


def _run_job(
    base: ScenarioConfig,
    spec: SweepSpec,
    job: SweepJob,
    out_dir: Path,
    settings: Settings,
) -> SweepRow:
    config = job_scenario(base, spec, job)
    run_dir = Path(out_dir) / RUNS_DIR / job.key
    run_scenario(
        config,
        out_dir=run_dir,
        stop_at_steady_state=spec.stop_at_steady_state,
        record_cycles=spec.export_cycles,
        settings=settings,
    )
    row = summarize_run(job, *read_run(run_dir))
    logger.debug(f"{job.key}: off={row.off_fraction:.2f} WS/on={row.mean_stations_per_on:.2f}")
    return row


# =============================================================================
# Aggregation
# =============================================================================

def runs_frame(rows: List[SweepRow]) -> pd.DataFrame:
    columns = list(SweepRow.model_fields)
    frame = pd.DataFrame([r.model_dump() for r in rows], columns=columns)
    return frame.sort_values(["value", "stations_per_gateway", "seed"], na_position="first").reset_index(drop=True)


def summarize(runs: pd.DataFrame) -> pd.DataFrame:
    """Seed-averaged rows per (value, stations_per_gateway)."""
    grouped = runs.groupby(GROUP_COLUMNS, dropna=False, sort=True)
    summary = grouped[SUMMARY_COLUMNS].mean()
    summary["seeds"] = grouped["seed"].count()
    return summary.reset_index()


def write_frames(out_dir: Path, runs: pd.DataFrame) -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    runs_path = out_dir / RUNS_FILE
    summary_path = out_dir / SUMMARY_FILE
    runs.to_csv(runs_path, index=False, float_format="%.10g", lineterminator="\n")
    summarize(runs).to_csv(summary_path, index=False, float_format="%.10g", lineterminator="\n")
    return [runs_path, summary_path]


def run_sweep(
    spec: SweepSpec,
    out_dir: Path,
    workers: Optional[int] = None,
    settings: Optional[Settings] = None,
) -> SweepResult:
    """
    Run every job of a sweep and write runs.csv and summary.csv.

    Args:
        spec: Validated sweep spec
        out_dir: Sweep directory; each run writes to out_dir/runs/<key>
        workers: Worker processes; None uses the settings, 1 runs in-process
        settings: Process settings; defaults to the global instance

    Raises:
        ScenarioError: If the base scenario or a variant is invalid
        InvariantViolation: If a run violates an invariant in strict mode
        OSError: If output cannot be written
    """
    settings = settings or get_settings()
    base = validate_and_load(spec.base)
    jobs = expand_jobs(spec)
    for job in {(j.value, j.stations_per_gateway): j for j in jobs}.values():
        job_scenario(base, spec, job)

    workers = workers if workers is not None else settings.sweep_workers
    workers = workers or os.cpu_count() or 1
    workers = min(workers, len(jobs))
    logger.info(f"Sweep '{spec.name}': {len(jobs)} runs over {spec.parameter} on {workers} worker(s)")

    if workers == 1:
        rows = [_run_job(base, spec, job, out_dir, settings) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_job, base, spec, job, out_dir, settings) for job in jobs]
            rows = [f.result() for f in futures]

    runs = runs_frame(rows)
    write_frames(out_dir, runs)
    logger.info(f"Sweep '{spec.name}' finished: {len(rows)} rows written to {out_dir}")
    return SweepResult(runs=rows, out_dir=Path(out_dir))


# =============================================================================
# Verification
# =============================================================================

def _job_of(row: pd.Series) -> SweepJob:
    variant = row["stations_per_gateway"]
    return SweepJob(
        value=float(row["value"]),
        stations_per_gateway=None if pd.isna(variant) else int(variant),
        seed=int(row["seed"]),
    )


def _compare_frames(label: str, expected: pd.DataFrame, found: pd.DataFrame) -> List[str]:
    if list(expected.columns) != list(found.columns) or len(expected) != len(found):
        return [f"{label}: shape or columns differ"]
    problems = []
    for column in expected.columns:
        a = pd.to_numeric(expected[column], errors="coerce").to_numpy(dtype=float)
        b = pd.to_numeric(found[column], errors="coerce").to_numpy(dtype=float)
        if not np.allclose(a, b, rtol=1e-9, atol=1e-9, equal_nan=True):
            problems.append(f"{label}: column {column} differs")
    return problems


def verify_sweep(sweep_dir: Path) -> List[str]:
    """
    Recompute every run row from its run files, and the summary from the rows.

    Returns:
        Mismatch descriptions; empty when the sweep is consistent

    Raises:
        OSError: If a file cannot be read
    """
    sweep_dir = Path(sweep_dir)
    stored = pd.read_csv(sweep_dir / RUNS_FILE)
    rows = []
    for _, row in stored.iterrows():
        job = _job_of(row)
        rows.append(summarize_run(job, *read_run(sweep_dir / RUNS_DIR / job.key)))
    recomputed = runs_frame(rows)

    problems = _compare_frames(RUNS_FILE, recomputed, stored)
    problems += _compare_frames(SUMMARY_FILE, summarize(stored), pd.read_csv(sweep_dir / SUMMARY_FILE))
    if problems:
        logger.warning(f"Sweep {sweep_dir} failed verification: {problems}")
    return problems
