import json
import os

import pytest

DATA = os.path.join(os.path.dirname(__file__), "data")

_ACCEPTANCE_LINES = []


def record_acceptance(line):
    _ACCEPTANCE_LINES.append(line)


@pytest.fixture
def profile_path(tmp_path):
    def make(**overrides):
        q = {"index": 0, "T1": 90.0, "T2": 100.0, "t_sx": 35.555,
             "prob_meas1_prep0": 0.02, "prob_meas0_prep1": 0.05}
        q.update(overrides)
        doc = {"device": "fake_lima", "calibrated_at": "2021-06-01T00:00:00Z", "qubits": [q]}
        path = tmp_path / f"profile_{len(list(tmp_path.iterdir()))}.json"
        path.write_text(json.dumps(doc))
        return str(path)
    return make


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", help="also run tests marked slow")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: minutes-long checks, skipped unless --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
