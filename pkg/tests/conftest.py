import numpy as np
import pytest

from ocuctx import ClassSpec, ContextConfig, LabelMask

# ---------------------------------------------------------------------------
# shared fixtures

@pytest.fixture
def spec():
    """Default vocabulary: 0 background, 1 iris, 2 sclera."""
    return ClassSpec(classes=((1, "iris"), (2, "sclera")))


@pytest.fixture
def cfg(spec):
    return ContextConfig(spec=spec)


@pytest.fixture
def two_block_pair(spec):
    """8x8 fixture: iris block identical, sclera block shifted up one row."""
    gt = np.zeros((8, 8), dtype=np.uint8)
    gt[1:4, 1:4] = 1
    gt[5:8, 5:8] = 2
    pred = np.zeros((8, 8), dtype=np.uint8)
    pred[1:4, 1:4] = 1
    pred[4:7, 5:8] = 2
    return LabelMask(gt, spec), LabelMask(pred, spec)


def random_grid_pair(rng, height, width, n_labels=3):
    """Independent uniform label grids (labels 0..n_labels-1)."""
    gt = rng.integers(0, n_labels, size=(height, width), dtype=np.uint8)
    pred = rng.integers(0, n_labels, size=(height, width), dtype=np.uint8)
    return gt, pred


# ---------------------------------------------------------------------------
# acceptance summary: one PASS/FAIL line per criterion at the end of the run

_CRITERIA: dict[str, str] = {}
_OUTCOMES: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(name): marks a test as one acceptance criterion"
    )


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("acceptance")
        if marker:
            _CRITERIA[item.nodeid] = marker.args[0]


def pytest_runtest_logreport(report):
    if report.nodeid not in _CRITERIA:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _OUTCOMES[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, name in _CRITERIA.items():
        outcome = _OUTCOMES.get(nodeid)
        if outcome is None:
            continue
        label = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        terminalreporter.write_line(f"{label}  {name}")
