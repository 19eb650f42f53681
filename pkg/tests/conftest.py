import pytest

from olsen_gspt.model import scaled_preset

_ACCEPTANCE_LINES = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def fig6():
    return scaled_preset("fig6")


@pytest.fixture(scope="session")
def fig10():
    return scaled_preset("fig10")


@pytest.fixture(scope="session")
def eps_tables():
    """Periodic orbits over the four eps levels for both cases (minutes; shared)."""
    from olsen_gspt.verify import eps_convergence_table

    return {c: eps_convergence_table(c) for c in ("canard", "jump")}

