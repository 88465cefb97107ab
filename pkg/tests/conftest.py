from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixture_dir():
    return FIXTURES / "icdar"


@pytest.fixture
def fixture_jsonl():
    return FIXTURES / "fixture.jsonl"


@pytest.fixture
def fixture_dataset(fixture_dir):
    from lenspot.annotations import load_dataset
    return load_dataset(fixture_dir, "icdar-dir")


def pytest_terminal_summary(terminalreporter):
    from gate import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance gate")
        for line in RESULTS:
            terminalreporter.write_line(line)
