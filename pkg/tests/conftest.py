import sys

import pytest

from nbsync.cells import set_access_hook
from nbsync.conobj.tasks import configure_backoff


@pytest.fixture
def busy_switching():
    """Make the interpreter switch threads often so races get a chance."""
    old = sys.getswitchinterval()
    sys.setswitchinterval(1e-5)
    yield
    sys.setswitchinterval(old)


@pytest.fixture(autouse=True)
def _clean_globals():
    backoff = configure_backoff(1e-6, 1e-3)
    configure_backoff(*backoff)
    yield
    set_access_hook(None)
    configure_backoff(*backoff)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(acceptance_log.LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def notes():
    """Free-form remarks appended to an acceptance verdict line."""
    return []
