from __future__ import annotations

import itertools
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from twinrecover.graph import CausalGraph, NodeKind

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def plain_dag(n: int, edges) -> CausalGraph:
    """All-endogenous DAG on V0..V{n-1}; edges go from lower to higher index."""
    nodes = {f"V{i}": NodeKind.ENDOGENOUS for i in range(n)}
    return CausalGraph(nodes, [(f"V{a}", f"V{b}") for a, b in edges])


@st.composite
def dags(draw, min_nodes=2, max_nodes=8):
    n = draw(st.integers(min_nodes, max_nodes))
    pairs = list(itertools.combinations(range(n), 2))
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    # shuffle labels so edge direction is not tied to name order
    perm = draw(st.permutations(range(n)))
    return plain_dag(n, [(perm[a], perm[b]) for (a, b), keep in zip(pairs, mask) if keep])


@st.composite
def selection_graphs(draw, max_endo=5):
    """X -> Y plus random extra endogenous nodes, a sink S, and one U per node."""
    k = draw(st.integers(0, max_endo - 2))
    endo = ["X", "Y"] + [f"W{i}" for i in range(1, k + 1)]
    order = draw(st.permutations(endo))
    pos = {v: i for i, v in enumerate(order)}
    if pos["X"] > pos["Y"]:
        order = list(order)
        order[pos["X"]], order[pos["Y"]] = "Y", "X"
        pos = {v: i for i, v in enumerate(order)}
    edges = {("X", "Y")}
    for a, b in itertools.combinations(order, 2):
        if (a, b) != ("X", "Y") and draw(st.booleans()):
            edges.add((a, b))
    parents_of_s = draw(st.lists(st.sampled_from(endo), min_size=1, unique=True))
    edges |= {(p, "S") for p in parents_of_s}
    nodes = {v: NodeKind.ENDOGENOUS for v in endo}
    nodes["S"] = NodeKind.SELECTION
    for v in [*endo, "S"]:
        nodes[f"U_{v}"] = NodeKind.EXOGENOUS
        edges.add((f"U_{v}", v))
    return CausalGraph(nodes, edges, ("X", "Y"))


def random_dag(rng: np.random.Generator, n: int, p: float) -> CausalGraph:
    perm = rng.permutation(n)
    edges = [(perm[a], perm[b]) for a, b in itertools.combinations(range(n), 2) if rng.random() < p]
    return plain_dag(n, edges)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# -- acceptance summary: one PASS/FAIL line per criterion ---------------------------

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed):
        return
    number, title = mark.args
    _CRITERIA[number] = (title, "PASS" if rep.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status = _CRITERIA[number]
        terminalreporter.write_line(f"{status}  criterion {number:2d}: {title}")
