import re

import pytest

from torus_lab import Lattice, SolverConfig, random_solenoidal, run, taylor_green

CORPUS_SEEDS = range(50)
CORPUS_SLOPE = 3.0
S_GRID = (1.25, 1.5, 2.0, 2.5)
R_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)


@pytest.fixture(scope="session")
def lattice8():
    return Lattice(8)


@pytest.fixture(scope="session")
def corpus(lattice8):
    return [random_solenoidal(lattice8, CORPUS_SLOPE, seed) for seed in CORPUS_SEEDS]


@pytest.fixture(scope="session")
def ns_tg16():
    """Taylor-Green Navier-Stokes run, nu = 1, N = 16, dt = 1e-3, samples every 1e-2."""
    cfg = SolverConfig(N=16, nu=1.0, dt=1e-3, t_end=0.5, s_values=(1.5, 2.0), sample_every=10)
    return run(cfg, taylor_green(cfg.lattice, 1.0))


@pytest.fixture(scope="session")
def euler_tg16():
    """Taylor-Green Euler run, N = 16, dt = 1e-3, monitoring s = 3/2 and 3."""
    cfg = SolverConfig(N=16, nu=0.0, dt=1e-3, t_end=0.5, s_values=(1.5, 3.0), sample_every=10)
    return run(cfg, taylor_green(cfg.lattice, 1.0))


_ACCEPTANCE = {}
_CRITERION = re.compile(r"test_criterion_(\d+)_(\w+)")


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if m is None:
        return
    key = (int(m.group(1)), m.group(2))
    if report.when == "call" or report.outcome != "passed":
        _ACCEPTANCE[key] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for (n, label), outcome in sorted(_ACCEPTANCE.items()):
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d} {label}: {verdict}")
