import pytest

from stackmc import worked_example

_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion for the terminal summary."""

    def record(number, name, ok, detail=""):
        _ACCEPTANCE.append((number, name, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number, name, ok, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        tr.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {name}: {detail}")


@pytest.fixture
def table_dataset():
    return worked_example.dataset()


@pytest.fixture
def table_partition():
    return worked_example.partition()
