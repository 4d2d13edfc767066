import math

import pytest
from hypothesis import settings

from overcommit.workload import Job, UsageDistribution, UsageKind

settings.register_profile("default", max_examples=150, deadline=None)
settings.load_profile("default")


@pytest.fixture
def symmetric_job():
    """1-core job at 0.3 or 1.0 cores with equal odds."""
    return Job.from_usage(0, 1, UsageDistribution(UsageKind.TWO_POINT, 0.3, 1.0, 0.65))


def copies(job, n):
    return [Job(k, job.size, job.lower, job.upper, job.mean, job.variance, job.range_sq, job.usage)
            for k in range(n)]


@pytest.fixture
def make_copies():
    return copies


INF = math.inf

# one line per acceptance criterion, echoed after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
