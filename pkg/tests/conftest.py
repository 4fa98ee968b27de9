import numpy as np
import pytest

from elsasser.spectral import make_grid


@pytest.fixture(scope="session")
def grid16():
    return make_grid(2, 16, 8.0)


@pytest.fixture(scope="session")
def grid32():
    return make_grid(2, 32, 8.0)


@pytest.fixture(scope="session")
def grid64():
    return make_grid(2, 64, 16.0)


@pytest.fixture(scope="session")
def grid3d():
    return make_grid(3, 16, 8.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects ``(criterion, passed, detail)`` lines for the terminal summary."""
    return request.config.stash.setdefault(ACCEPTANCE_KEY, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(lines):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {num:2d}: {detail}")
