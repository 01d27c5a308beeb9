import pytest

_REPORT = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_REPORT] = {}


@pytest.fixture
def acceptance(request):
    """Record ``(criterion, passed, detail)`` for the end-of-run summary."""
    report = request.config.stash[_REPORT]

    def record(number, title, passed, detail):
        report[number] = (title, bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    report = config.stash[_REPORT]
    if not report:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(report):
        title, passed, detail = report[number]
        terminalreporter.write_line(f"C{number} {'PASS' if passed else 'FAIL'}  {title}: {detail}")
