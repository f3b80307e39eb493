import pytest
from hypothesis import settings

from ltlsynth.project import bundled_project, load_project
from ltlsynth.solver import synth_expected, synth_worstcase

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")

CRITERIA = {
    1: "expected-case golden value and stage counts",
    2: "worst-case golden value and stage counts",
    3: "policy shape of both controllers",
    4: "alternating vs upfront game values on random AMDPs",
    5: "min/max exchange identities on random instances",
    6: "value iteration correctness",
    7: "Monte-Carlo consistency of both controllers",
    8: "stage report structure",
}

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    if report.when != "call" and not report.failed:
        return
    crit = getattr(report, "criterion", None)
    if crit is None:
        return
    _outcomes.setdefault(crit, []).append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        report.criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, desc in CRITERIA.items():
        results = _outcomes.get(n)
        if not results:
            continue
        status = "PASS" if all(r == "passed" for r in results) else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {status}  {desc}")


@pytest.fixture(scope="session")
def project():
    return load_project(bundled_project())


@pytest.fixture(scope="session")
def expected_result(project):
    return synth_expected(project.plant, project.env_models, project.beliefs, project.spec,
                          project.defines)


@pytest.fixture(scope="session")
def worstcase_result(project):
    return synth_worstcase(project.plant, project.env_models, project.beliefs, project.spec,
                           project.defines)
