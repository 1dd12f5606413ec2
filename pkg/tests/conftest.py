import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from zkstrip.basis import Grid

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

CASES = ("a", "b", "c", "d")


def small_grid(case: str, X: float = 10.0, Nx: int = 64, L: float = 2.0, Ny: int | None = None) -> Grid:
    if Ny is None:
        Ny = 9 if case == "d" else 8
    return Grid(X, Nx, L, Ny, case)


@pytest.fixture(params=CASES)
def case(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance bookkeeping: criterion number -> [(test name, passed, details)]
ACCEPTANCE: dict = {}
N_CRITERIA = 11


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): numbered acceptance criterion exercised by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        details = [f"{k}={v}" for k, v in item.user_properties]
        ACCEPTANCE.setdefault(mark.args[0], []).append((item.name, rep.passed, details))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        rows = ACCEPTANCE.get(n, [])
        if not rows:
            tr.write_line(f"criterion {n:2d}: FAIL (not run)")
            continue
        ok = all(passed for _, passed, _ in rows)
        failed = [name for name, passed, _ in rows if not passed]
        tail = "" if ok else "  failing: " + ", ".join(failed)
        tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} ({len(rows)} tests){tail}")
        for _, _, details in rows:
            for d in details:
                tr.write_line(f"    {d}")
