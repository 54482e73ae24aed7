import os

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("kobgeo", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("kobgeo")

# criterion number -> (title, outcome, detail)
_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")
    config.addinivalue_line("markers", "slow: long-running numeric test")


@pytest.fixture
def record(request):
    """Attach a detail string to the acceptance line of the running test."""
    marker = request.node.get_closest_marker("criterion")
    details = []
    yield details.append
    if marker is not None:
        n, title = marker.args
        prev = _CRITERIA.get(n, (title, None, ""))
        _CRITERIA[n] = (title, prev[1], "; ".join(filter(None, [prev[2]] + details)))


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = [m for m in getattr(report, "keywords", {}) if m == "criterion"]
    if not marker:
        return
    # the marker args live on the item; recover them from user properties
    for key, val in report.user_properties:
        if key == "criterion":
            n, title = val
            prev = _CRITERIA.get(n, (title, None, ""))
            ok = report.outcome == "passed"
            outcome = ok if prev[1] is None else (prev[1] and ok)
            _CRITERIA[n] = (title, outcome, prev[2])


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            item.user_properties.append(("criterion", tuple(m.args)))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[n]
        status = "PASS" if ok else ("FAIL" if ok is not None else "NOT RUN")
        line = f"criterion {n:2d} {status}: {title}"
        if detail:
            line += f" [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(autouse=True, scope="session")
def _threads():
    os.environ.setdefault("KOBGEO_THREADS", str(os.cpu_count() or 1))
    yield
