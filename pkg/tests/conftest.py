import os

import pytest
from hypothesis import settings

from rsabl.table import DecisionTable

settings.register_profile("default", deadline=None, max_examples=60)
settings.register_profile("ci", deadline=None, max_examples=300)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE: list[tuple[str, bool, str]] = []


def make_t1() -> DecisionTable:
    """Six animals, inconsistent: objects 2, 3 and 5 share (flys=0, swims=1)."""
    return DecisionTable.from_rows(
        ["flys", "swims"],
        "d",
        [["1", "0"], ["1", "0"], ["0", "1"], ["0", "1"], ["0", "0"], ["0", "1"]],
        ["bat", "bat", "otter", "otter", "bear", "bear"],
    )


def make_t2p() -> DecisionTable:
    """Five animals, consistent, with ``furry`` redundant given ``swims``."""
    return DecisionTable.from_rows(
        ["flys", "swims", "furry"],
        "d",
        [["1", "0", "0"], ["1", "0", "0"], ["0", "1", "1"], ["0", "1", "1"], ["0", "0", "1"]],
        ["bat", "bat", "otter", "otter", "bear"],
    )


@pytest.fixture
def t1():
    return make_t1()


@pytest.fixture
def t2p():
    return make_t2p()


@pytest.fixture
def acceptance():
    def record(name: str, ok: bool, detail: str = "") -> None:
        ACCEPTANCE.append((name, ok, detail))
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
