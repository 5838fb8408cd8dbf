import re

import pytest

from qgnls import graph, solver

_CRITERIA = {}
_DETAILS = {}


@pytest.fixture
def criterion_log(request):
    """Collect per-criterion detail lines for the end-of-run summary."""
    m = re.search(r"test_criterion_(\d+)", request.node.name)
    key = int(m.group(1)) if m else request.node.name
    lines = _DETAILS.setdefault(key, [])
    return lines.append


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = int(m.group(1))
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA[key] = (m.group(2), report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(_CRITERIA):
        name, outcome = _CRITERIA[key]
        tag = "PASS" if outcome == "passed" else "FAIL"
        tr.write_line(f"criterion {key:2d} {name:<32} {tag}")
        for line in _DETAILS.get(key, []):
            tr.write_line(f"    {line}")


# states at p = 8, mu = 1 shared by the solver, morse and acceptance tests

def _solve(g):
    st, _ = solver.continuation_to_mass(g, 1.0, 1.0, 8.0)
    return st


@pytest.fixture(scope="session")
def segment_state():
    return _solve(graph.segment(4.0))


@pytest.fixture(scope="session")
def star_state():
    return _solve(graph.star_halflines(3))


@pytest.fixture(scope="session")
def tadpole_state():
    return _solve(graph.tadpole())


@pytest.fixture(scope="session")
def accepted_states(segment_state, star_state, tadpole_state):
    return {"segment": segment_state, "star": star_state, "tadpole": tadpole_state}
