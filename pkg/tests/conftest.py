import pytest


@pytest.fixture(scope="session")
def acceptance_report(request):
    """Collects one ``PASS``/``FAIL`` line per acceptance criterion."""
    lines = request.config.stash.setdefault(_REPORT, [])
    return lines


_REPORT = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_REPORT, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
