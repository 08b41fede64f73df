import pytest

from potential_regions.experiments import build_regions, make_run


@pytest.fixture(scope="session")
def run():
    return make_run({})


@pytest.fixture(scope="session")
def built(run):
    return build_regions(run)


@pytest.fixture(scope="session")
def K(run):
    return run.kernel


@pytest.fixture(scope="session")
def rK(run):
    return run.gauge


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config._acceptance_lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
