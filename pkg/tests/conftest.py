import pytest


def pytest_configure(config):
    config._acceptance = {}


@pytest.fixture(scope="session")
def record_criterion(request):
    """Record one acceptance criterion outcome; fails the test when not met."""
    store = request.config._acceptance

    def record(number, title, ok, detail=""):
        store[number] = (title, bool(ok), detail)
        assert ok, f"criterion {number} ({title}) not met: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = getattr(config, "_acceptance", {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        title, ok, detail = store[number]
        line = f"[{'PASS' if ok else 'FAIL'}] {number}. {title}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)
