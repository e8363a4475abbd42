from pathlib import Path

import pytest

from cadplan.model import load_model
from cadplan.plan_io import import_results, load_plan

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"
PROFILES = ROOT / "profiles"

TABLE1 = FIXTURES / "table1.model.json"
TABLE2 = FIXTURES / "table2.plan.csv"
FIGURE2 = FIXTURES / "figure2.results.csv"

HELLO = "Hello_Interval_Time"


@pytest.fixture
def table1():
    return load_model(TABLE1)


@pytest.fixture
def table2(table1):
    return load_plan(TABLE2, table1)


@pytest.fixture
def table2_rows(table2):
    return table2.rows()


@pytest.fixture
def figure2(table2):
    return import_results(FIGURE2.read_text(), table2)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.VERDICTS:
            terminalreporter.write_line(line)
