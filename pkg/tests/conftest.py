import numpy as np
import pytest

from drl_basal.sim import average_subject, make_subject
from drl_basal.training import TrainConfig


@pytest.fixture(scope="session")
def adult():
    return average_subject("adult")


@pytest.fixture(scope="session")
def adult01():
    return make_subject("adult", 1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config():
    """A short training budget that still exercises every code path."""
    return TrainConfig(generalized_days=2, personalized_days=1, test_days=2, explore_steps=100,
                       sync_generalized=50, sync_personalized=20, buffer_size=400, log_every=48)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion."""
    box = {}

    def set_label(number, text):
        box["label"] = f"criterion {number:>2}: {text}"

    yield set_label
    rep = getattr(request.node, "rep_call", None)
    ok = rep is not None and rep.passed
    line = f"{'PASS' if ok else 'FAIL'}  {box.get('label', request.node.name)}"
    ACCEPTANCE_LINES.append(line)
    print(line)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
