import numpy as np
import pytest

from flatgap.geometry import ProblemConfig, Profile


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def flat_cfg():
    return ProblemConfig(n=3, epsilon=1e-2, a=1.0, r0=0.25, gamma=0.5, mode_k=1)


@pytest.fixture
def flat_profile(flat_cfg):
    return Profile.from_config(flat_cfg)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one criterion outcome; lines are printed in the terminal summary."""
    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        request.config.stash.setdefault(_ACCEPTANCE, []).append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
