import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def ourbt_run(tmp_path_factory):
    """One full fixture experiment, shared by the slow tests."""
    from btkit.experiment import load_config, run_experiment

    run_dir = tmp_path_factory.mktemp("runs") / "ourbt"
    cfg = load_config(FIXTURES / "ourbt.ini", run_dir=run_dir)
    return run_experiment(cfg)


ACCEPTANCE: dict[int, str] = {}


class Verdict:
    def __init__(self, n: int):
        self.n = n

    def __call__(self, ok: bool, detail: str) -> bool:
        ACCEPTANCE[self.n] = f"{'PASS' if ok else 'FAIL'}  criterion {self.n:2d}: {detail}"
        return ok


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for the acceptance criterion in the test's ``criterion`` mark."""
    n = request.node.get_closest_marker("criterion").args[0]
    v = Verdict(n)
    yield v
    if n not in ACCEPTANCE:
        ACCEPTANCE[n] = f"FAIL  criterion {n:2d}: did not complete"


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
