import pytest
from hypothesis import settings

from shrinkerlab.geometry import make_geometry
from shrinkerlab.shrinker import make_shrinker

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def geom4():
    return make_geometry(4, 0.25)


@pytest.fixture(scope="session")
def shr4(geom4):
    return make_shrinker(geom4)


@pytest.fixture
def report():
    """Record one acceptance verdict line and assert it."""

    def _report(label, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
