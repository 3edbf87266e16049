# Directory: fedgw-sim/tests/test_sweep.py

"""Parameter sweeps: job expansion, scenario variants, aggregation and verification."""

import pandas as pd
import pytest

from app.config.scenario_loader import ScenarioError
from app.schemas.scenario import SweepSpec
from app.services.sweep import (
    RUNS_DIR,
    RUNS_FILE,
    SUMMARY_FILE,
    SweepJob,
    expand_jobs,
    job_scenario,
    run_sweep,
    set_dotted,
    state_at,
    verify_sweep,
)


def test_set_dotted_walks_dicts_and_lists():
    data = {"flows": [{"load": 1.0}], "seed": 1}
    set_dotted(data, "flows.0.load", 5.0)
    set_dotted(data, "seed", 9)
    assert data == {"flows": [{"load": 5.0}], "seed": 9}


@pytest.mark.parametrize("path", ["flows.3.load", "flows.0.rate", "missing", "flows.x.load"])
def test_set_dotted_unknown_path(path):
    with pytest.raises(ScenarioError) as info:
        set_dotted({"flows": [{"load": 1.0}]}, path, 0.0)
    assert info.value.diagnostics[0][0] == path


def test_expand_jobs_key_order():
    spec = SweepSpec(base="light10", parameter="seed", values=[2.0, 1.0], stations_per_gateway=[4, 2], seeds=[2, 1])
    jobs = expand_jobs(spec)
    assert [(j.value, j.stations_per_gateway, j.seed) for j in jobs[:3]] == [(1.0, 2, 1), (1.0, 2, 2), (1.0, 4, 1)]
    assert len(jobs) == 8


def test_expand_jobs_without_variants():
    spec = SweepSpec(base="light10", parameter="seed", values=[1.0], seeds=[3])
    assert expand_jobs(spec) == [SweepJob(value=1.0, stations_per_gateway=None, seed=3)]


def test_job_keys():
    assert SweepJob(value=1e6, seed=3).key == "v1e+06_base_s3"
    assert SweepJob(value=250000.0, stations_per_gateway=4, seed=1).key == "v250000_n4_s1"


def test_job_scenario_applies_the_point(small_federation, small_federation_file):
    spec = SweepSpec(
        base=str(small_federation_file), parameter="flow_templates.0.offered_load",
        values=[2.5e5], stations_per_gateway=[1], duration=1.5,
    )
    job = SweepJob(value=2.5e5, stations_per_gateway=1, seed=8)
    config = job_scenario(small_federation, spec, job)

    assert config.flow_templates[0].offered_load == 2.5e5
    assert config.population.stations_per_gateway == 1
    assert config.seed == 8
    assert config.duration == 1.5
    assert config.name == f"small-{job.key}"


def test_job_scenario_variant_needs_population(bundled):
    base = bundled("bss-tcp-udp")
    spec = SweepSpec(base="bss-tcp-udp", parameter="seed", values=[1.0], stations_per_gateway=[2])
    with pytest.raises(ScenarioError, match="population"):
        job_scenario(base, spec, SweepJob(value=1.0, stations_per_gateway=2, seed=1))


def test_state_at_reads_the_timelines():
    gateways = pd.DataFrame({
        "time": [0.0, 0.0, 4.0],
        "gateway": ["g0", "g1", "g1"],
        "state": ["on", "on", "off"],
        "n_stations": [1, 1, 0],
        "on_count": [2, 2, 1],
    })
    assoc = pd.DataFrame({
        "time": [0.0, 0.0, 3.0],
        "station": ["s0", "s1", "s1"],
        "from_gateway": ["", "", "g1"],
        "to_gateway": ["g0", "g1", "g0"],
        "reason": ["initial", "initial", "light"],
    })
    assert state_at(gateways, assoc, 1.0) == (["g0", "g1"], {"g0": 1, "g1": 1})
    assert state_at(gateways, assoc, 5.0) == (["g0"], {"g0": 2})


@pytest.fixture
def small_sweep(small_federation_file):
    return SweepSpec(
        name="small-sweep",
        base=str(small_federation_file),
        parameter="flow_templates.0.offered_load",
        values=[2.5e5, 5.0e5],
        stations_per_gateway=[1, 2],
        seeds=[1, 2],
        duration=1.0,
    )


def test_sweep_writes_and_verifies(small_sweep, settings, tmp_path):
    out = tmp_path / "sweep"
    result = run_sweep(small_sweep, out, workers=1, settings=settings)

    assert len(result.runs) == 8
    runs = pd.read_csv(out / RUNS_FILE)
    summary = pd.read_csv(out / SUMMARY_FILE)
    assert len(runs) == 8
    assert len(summary) == 4
    assert (summary["seeds"] == 2).all()
    assert runs["off_fraction"].between(0, 1).all()
    assert (runs["n_gateways"] == 2).all()
    for job in expand_jobs(small_sweep):
        assert (out / RUNS_DIR / job.key / "manifest.json").is_file()

    assert verify_sweep(out) == []


def test_sweep_verification_catches_edits(small_sweep, settings, tmp_path):
    out = tmp_path / "sweep"
    run_sweep(small_sweep, out, workers=1, settings=settings)

    runs = pd.read_csv(out / RUNS_FILE)
    runs.loc[0, "off_fraction"] = 0.25
    runs.to_csv(out / RUNS_FILE, index=False)

    problems = verify_sweep(out)
    assert f"{RUNS_FILE}: column off_fraction differs" in problems


def test_sweep_rejects_unknown_parameter(small_sweep, settings, tmp_path):
    spec = small_sweep.model_copy(update={"parameter": "flow_templates.0.colour"})
    with pytest.raises(ScenarioError):
        run_sweep(spec, tmp_path / "sweep", workers=1, settings=settings)
    assert not (tmp_path / "sweep" / RUNS_FILE).exists()
