import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# Verdict lines recorded by the acceptance suite; echoed after the run so
# they survive pytest's output capture.
ACCEPTANCE_VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)


from kbreason.datasets import (
    build_clutrr_split,
    build_rule_library,
    kinship_composition,
    kinship_schema,
)


@pytest.fixture(scope="session")
def small_corpus():
    return build_clutrr_split(range(2, 7), 8, 11)


@pytest.fixture(scope="session")
def small_library(small_corpus):
    return build_rule_library(small_corpus)


@pytest.fixture(scope="session")
def schema():
    return kinship_schema()


@pytest.fixture(scope="session")
def table():
    return kinship_composition()
