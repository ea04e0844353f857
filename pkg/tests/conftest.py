import os
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=1000,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SAMPLE_LINE = ("1001,alice,bio,blast_run,mpi,cpu-23-1,1596240000,1596240300,1596243900,3600,"
               "129600.0,7200.0,1.5,2.0,4.2e9,36,300,0")


@pytest.fixture(scope="session")
def small_config():
    from wfpred.synth import GeneratorConfig

    return GeneratorConfig(n_users=30, days=10, jobs_per_day_mean=150.0, seed=11)


@pytest.fixture(scope="session")
def small_trace(small_config):
    from wfpred.synth import generate_trace

    return generate_trace(small_config)


@pytest.fixture(scope="session")
def small_filtered(small_trace):
    from wfpred.features import normalize_job_names
    from wfpred.trace import filter_records

    return normalize_job_names(filter_records(small_trace))


_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(n, ok, detail)``; returns ``ok``."""

    def record(number, ok, detail=""):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        _CRITERIA[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
