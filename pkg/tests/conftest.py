import pytest

_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_KEY] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion outcome, then fail the test if it failed."""
    log = request.config.stash[_KEY]

    def record(number: int, title: str, ok: bool, detail: str = ""):
        log[number] = (title, ok, detail)
        assert ok, f"criterion {number} ({title}) failed: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_KEY, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(log):
        title, ok, detail = log[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
