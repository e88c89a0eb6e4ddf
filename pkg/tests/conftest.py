import numpy as np
import pytest

from hawkesinfluence.events import Event, EventSequence, GroupId, make_groups
from hawkesinfluence.urls import Category


def make_sequence(times, marks, window_T, labels=None, url="u", category=Category.OTHER):
    """Build a sequence directly from parallel time/group lists (K may be 1)."""
    K = max(marks) + 1 if labels is None else len(labels)
    labels = labels or [f"g{k}" for k in range(max(K, 1))]
    groups = tuple(GroupId(i, lab) for i, lab in enumerate(labels))
    events = [Event(groups[m], float(t)) for t, m in zip(times, marks)]
    return EventSequence.from_events(url, category, events, float(window_T), groups)


@pytest.fixture
def seq_factory():
    return make_sequence


@pytest.fixture
def four_groups():
    return make_groups(["pol", "reddit", "twitter", "trolls"])


@pytest.fixture
def rng():
    return np.random.default_rng(20181015)


def pytest_configure(config):
    config.acceptance_results = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "acceptance_results", [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, ok, detail in sorted(results, key=lambda r: r[0]):
        terminalreporter.write_line(f"[{number}] {'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture
def record(request):
    """Log one acceptance line, then assert it."""

    def _record(number, name, ok, detail):
        request.config.acceptance_results.append((number, name, bool(ok), detail))
        print(f"[{number}] {'PASS' if ok else 'FAIL'}  {name}: {detail}")
        assert ok, f"criterion {number} ({name}) failed: {detail}"

    return _record
