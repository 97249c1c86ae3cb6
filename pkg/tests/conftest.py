import numpy as np
import pytest

from mml import Grid, ManufacturedSpec


@pytest.fixture
def grid128():
    return Grid(128, 128)


@pytest.fixture
def small_grid():
    return Grid(16, 16)


@pytest.fixture
def spec():
    return ManufacturedSpec(base_seed=1234)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


# -- acceptance summary: one line per criterion ---------------------------------

CRITERIA: dict[int, list[tuple[str, bool, str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    failed_setup = report.when == "setup" and not report.passed
    if report.when == "call" or failed_setup:
        ok = report.passed and not hasattr(report, "wasxfail")
        detail = dict(item.user_properties).get("detail", "")
        CRITERIA.setdefault(marker.args[0], []).append((item.name, ok, detail))


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        rows = CRITERIA[n]
        verdict = "PASS" if all(ok for _, ok, _ in rows) else "FAIL"
        details = "; ".join(d for _, _, d in rows if d)
        terminalreporter.write_line(f"criterion {n:2d}: {verdict}  {details}".rstrip())
