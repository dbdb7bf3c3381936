import numpy as np
import pytest

from copula_hmm import CopulaHmm, CopulaSpec, Family, MarginalSpec, StateSpec

# Random-model helpers shared across test modules.

THETA_RANGES = {
    Family.FRANK: (-15.0, 15.0),
    Family.CLAYTON: (0.2, 8.0),
    Family.GUMBEL: (1.1, 6.0),
    Family.JOE: (1.1, 6.0),
    Family.GAUSS: (-0.9, 0.9),
    Family.FGM: (-0.95, 0.95),
}


def random_copula(rng, family=None):
    fams = list(THETA_RANGES) + [Family.INDEPENDENCE]
    fam = Family.parse(family) if family is not None else fams[rng.integers(len(fams))]
    if fam is Family.INDEPENDENCE:
        return CopulaSpec(fam)
    lo, hi = THETA_RANGES[fam]
    theta = rng.uniform(lo, hi)
    if fam is Family.FRANK and abs(theta) < 0.05:
        theta = 0.5
    return CopulaSpec(fam, theta)


def random_model(rng, K, d=2, family=None, mixture=False):
    states = []
    for _ in range(K):
        margins = [MarginalSpec.gaussian(rng.normal(0, 2), rng.uniform(0.5, 2.0)) for _ in range(d)]
        cop = random_copula(rng, family) if d == 2 else CopulaSpec(Family.INDEPENDENCE)
        states.append(StateSpec(margins, cop))
    pi = rng.dirichlet(np.ones(K))
    if mixture:
        gamma = np.tile(pi, (K, 1))
    else:
        gamma = rng.dirichlet(np.ones(K), size=K)
    return CopulaHmm(pi, gamma, states)


def frank_k2_model(theta1=4.0, theta2=-3.0):
    states = [
        StateSpec([MarginalSpec.gaussian(0.0, 1.0), MarginalSpec.gaussian(1.0, 0.8)], CopulaSpec(Family.FRANK, theta1)),
        StateSpec([MarginalSpec.gaussian(2.5, 0.7), MarginalSpec.gaussian(-1.0, 1.2)], CopulaSpec(Family.FRANK, theta2)),
    ]
    return CopulaHmm([0.6, 0.4], [[0.8, 0.2], [0.3, 0.7]], states)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=[True, False], ids=["numba", "numpy"])
def kernel_mode(request, monkeypatch):
    if request.param:
        monkeypatch.delenv("CHMM_DISABLE_NUMBA", raising=False)
    else:
        monkeypatch.setenv("CHMM_DISABLE_NUMBA", "1")
    return request.param


# Acceptance summary: one line per criterion at the end of the run.

_ACCEPTANCE = {}
ACCEPTANCE_DETAILS = {}  # criterion -> measured values, filled in by the tests


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion number and description")


def pytest_runtest_logreport(report):
    item_marker = getattr(report, "criterion", None)
    if item_marker is None:
        return
    n, text = item_marker
    outcome = "SKIP" if report.skipped else ("PASS" if report.passed else "FAIL")
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        prev = _ACCEPTANCE.get(n)
        if prev is None or prev[0] == "PASS":
            detail = ""
            if report.skipped and isinstance(report.longrepr, tuple):
                detail = report.longrepr[2]
            _ACCEPTANCE[n] = (outcome, text, detail)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        rep.criterion = (marker.args[0], marker.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        outcome, text, detail = _ACCEPTANCE[n]
        line = f"criterion {n:>2}: {outcome}  {text}"
        detail = ACCEPTANCE_DETAILS.get(n, detail)
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
