from pathlib import Path

import numpy as np
import pytest

from mscale_gcn.graph import Graph, read_edge_list

FIXTURES = Path(__file__).parent / "fixtures"

# criterion number -> (title, outcome, detail); filled by the acceptance tests
_CRITERIA: dict = {}


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def two_triangles():
    """Triangles {0,1,2} and {3,4,5} joined by the bridge (2, 3)."""
    return Graph.from_pairs(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])


@pytest.fixture(scope="session")
def karate():
    return read_edge_list(FIXTURES / "karate.edges", n_nodes=34)


@pytest.fixture(scope="session")
def karate_factions():
    rows = [ln.split() for ln in (FIXTURES / "karate.factions").read_text().splitlines()
            if ln.strip() and not ln.startswith("#")]
    arr = np.array(rows, dtype=np.int64)
    return arr[:, 1], arr[:, 2]  # documented factions, reference first split


@pytest.fixture
def toy_cora():
    return FIXTURES / "toy6.content", FIXTURES / "toy6.cites"


@pytest.fixture
def criterion(request):
    """Attach a one-line measurement to the running acceptance test."""
    def note(detail: str):
        request.node.user_properties.append(("detail", detail))
    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = "; ".join(v for k, v in item.user_properties if k == "detail")
        if rep.failed and not detail:
            detail = str(rep.longrepr.reprcrash.message if hasattr(rep.longrepr, "reprcrash")
                         else rep.longrepr).splitlines()[0]
        _CRITERIA[mark.args[0]] = (mark.args[1], rep.outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        title, outcome, detail = _CRITERIA[num]
        status = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        terminalreporter.write_line(f"criterion {num} [{status}] {title}: {detail}")
