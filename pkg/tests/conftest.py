import pytest

from mtcsim.engine import apply_events, initial_environment, scenario_events
from mtcsim.scenario import parse_scenario

# CBSD ids in the bundled fig2 scenario
PAL1, PAL2, GAA1, GAA2, GAA3 = 1, 2, 3, 4, 5


def ch(n):
    """0-based index of the 1-based channel label CHn."""
    return n - 1


@pytest.fixture(scope="session")
def fig2():
    return parse_scenario("fig2")


def environments(scenario, horizon=None, mode=None):
    horizon = scenario.horizon if horizon is None else horizon
    env = initial_environment(scenario.pool, scenario.interference_matrix(), scenario.initial_available,
                              mode or scenario.feasibility_mode)
    events = scenario_events(scenario, horizon)
    out = []
    for t in range(horizon):
        env = apply_events(env, events.get(t, []))
        out.append(env)
    return out


@pytest.fixture
def fig2_envs(fig2):
    return environments(fig2)


# acceptance reporting: one verdict line per criterion in the terminal summary
_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (rep.when == "call" or rep.failed):
        return
    props = dict(item.user_properties)
    status = props.get("verdict") or ("PASS" if rep.passed else "FAIL")
    if rep.failed:
        status = "FAIL"
    number, title = marker.args
    _CRITERIA[number] = f"criterion {number} {title}: {status}" + (f" ({props['detail']})" if "detail" in props else "")


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
