import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def verdict(request):
    """Print and remember one ``C<n> PASS|FAIL`` line for the acceptance summary."""
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def emit(number: int, passed: bool, detail: str) -> bool:
        line = f"C{number:<2} {'PASS' if passed else 'FAIL'}  {detail}"
        request.config._acceptance_lines.append(line)
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)
        return passed

    return emit


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s[1:3])):
            terminalreporter.write_line(line)
