import pathlib

import pytest
from hypothesis import settings


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    rows = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            if getattr(report, "when", "call") != "call":
                continue
            if "test_acceptance" in report.nodeid:
                rows.append((report.nodeid.split("::")[-1], outcome))
    if rows:
        terminalreporter.section("acceptance criteria")
        for name, outcome in rows:
            terminalreporter.write_line(
                f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")

from gramscore import parse_tagged, render_gold
from gramscore.samples import RECORDING_SCRIPT, SAMPLE_PARAGRAPH

settings.register_profile("suite", deadline=None)
settings.load_profile("suite")

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def sample_text() -> str:
    return SAMPLE_PARAGRAPH


@pytest.fixture(scope="session")
def script_text() -> str:
    return RECORDING_SCRIPT


@pytest.fixture(scope="session")
def city_text() -> str:
    return (FIXTURES / "city_reply.txt").read_text()


@pytest.fixture(scope="session")
def physics_text() -> str:
    return (FIXTURES / "physics_reply.txt").read_text()


@pytest.fixture(scope="session")
def sample_paragraph():
    return parse_tagged(SAMPLE_PARAGRAPH)


@pytest.fixture(scope="session")
def sample_forms(sample_paragraph):
    return render_gold(sample_paragraph)


@pytest.fixture(scope="session")
def script_paragraph():
    return parse_tagged(RECORDING_SCRIPT)
