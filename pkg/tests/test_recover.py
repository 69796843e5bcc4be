import pytest
from hypothesis import given

from conftest import selection_graphs
from twinrecover.dsep import d_separated
from twinrecover.fixtures import SOURCES, load
from twinrecover.graph import GraphError, NodeKind, parse_graph
from twinrecover.recover import (
    DataRegime,
    Failure,
    FormulaPlan,
    Natural,
    PlanKind,
    RCDepthExceeded,
    RecoverableWith,
    check_natural,
    decide,
    find_admissible_sets,
    rc,
    verdict_to_json,
)
from twinrecover.twin import build_twin

W_ALL = ("W1", "W2", "W3", "W4")


def all_external(g):
    return DataRegime(external_unbiased=tuple(v for v in g.endogenous if v not in ("X", "Y")))


@pytest.mark.parametrize(
    "name,natural",
    [("fig1", False), ("fig2a", True), ("fig2b", False), ("fig2c", True), ("fig3a", False),
     ("fig3b", True), ("fig3c", False), ("fig8", False), ("fig9", False)],
)
def test_check_natural(name, natural):
    assert check_natural(load(name), "X", "Y") is natural


def test_confounder_neither_needed_nor_sufficient():
    # a confounded graph can be natural, an unconfounded one not
    assert check_natural(load("fig2c"), "X", "Y")
    assert not check_natural(load("fig3a"), "X", "Y")


def test_fig3c_admissible_sets():
    sets = find_admissible_sets(load("fig3c"), "X", "Y", W_ALL)
    assert ("W1", "W3") in sets and ("W1", "W4") in sets
    assert sets == sorted(sets, key=lambda s: (len(s), s))
    assert sets[:2] == [("W1", "W3"), ("W1", "W4")]


@pytest.mark.parametrize("max_size", [1, 2, 3, 4])
def test_fig9_has_no_admissible_set(max_size):
    assert find_admissible_sets(load("fig9"), "X", "Y", W_ALL, max_size) == []


def test_candidates_validated():
    with pytest.raises(GraphError):
        find_admissible_sets(load("fig3c"), "X", "Y", ["X", "W1"])
    with pytest.raises(GraphError):
        find_admissible_sets(load("fig3c"), "X", "Y", ["U_W1"])


def test_rc_step1():
    g = load("fig3c")
    plan = rc(g, ["W1"], ["W3"], DataRegime(external_unbiased=("W1", "W3")))
    assert plan.step == 1


def test_rc_step2():
    g = load("fig3c")
    plan = rc(g, ["W1"], ["X"], DataRegime())
    assert plan.step == 2
    assert d_separated(g, "S", "W1", "X")


def test_rc_step5_fail():
    g = load("fig3a")
    assert rc(g, ["Y"], [], DataRegime()) is None


def test_rc_chain_rule_and_depth():
    g = load("fig3c")
    regime = DataRegime(external_unbiased=("W1", "W3"))
    plan = rc(g, ["W1", "W4"], [], regime)
    assert plan.step == 4
    assert [s.step for s in plan.children] == [3, 1]
    assert plan.children[0].c == ("W3",)
    with pytest.raises(RCDepthExceeded):
        rc(g, ["W1", "W4"], [], regime, depth_budget=1)
    with pytest.raises(ValueError):
        rc(g, ["W1"], [], regime, depth_budget=0)


def test_rc_other_external_set():
    g = load("fig3c")
    regime = DataRegime(external_unbiased=("W1", "W4"))
    assert rc(g, ["W1", "W3"], [], regime) is None
    v = decide(g, "X", "Y", regime)
    assert isinstance(v, RecoverableWith)
    assert ("W1", "W4") in v.adjustment_sets
    assert ("W1", "W3") not in v.adjustment_sets


def test_decide_examples():
    assert isinstance(decide(load("fig2a"), "X", "Y", DataRegime()), Natural)
    v = decide(load("fig3c"), "X", "Y", DataRegime(W_ALL, ("W1", "W3")))
    assert isinstance(v, RecoverableWith)
    assert v.adjustment_sets[:2] == [("W1", "W3"), ("W1", "W4")]
    assert [len(s) for s in v.adjustment_sets] == sorted(len(s) for s in v.adjustment_sets)
    for regime in (DataRegime(), all_external(load("fig9"))):
        f = decide(load("fig9"), "X", "Y", regime)
        assert isinstance(f, Failure) and f.reason == "no admissible set"


def test_decide_rc_failure_reason():
    v = decide(load("fig2b"), "X", "Y", DataRegime())
    assert isinstance(v, Failure)
    assert v.reason == "RC failed on all admissible sets"
    assert any("RC failed" in s.text for s in v.trace)


def test_depth_exhaustion_lands_in_trace():
    v = decide(load("fig3c"), "X", "Y", DataRegime(external_unbiased=("W1", "W3")), depth_budget=1)
    assert isinstance(v, RecoverableWith)
    assert ("W1", "W4") not in v.adjustment_sets


def test_regime_validated():
    with pytest.raises(GraphError):
        decide(load("fig3c"), "X", "Y", DataRegime(external_unbiased=("S",)))


def test_natural_plan_has_no_set():
    with pytest.raises(ValueError):
        FormulaPlan(PlanKind.NATURAL, ("W",), ())


@pytest.mark.parametrize("name", sorted(SOURCES))
def test_plans_replay(name):
    g = load(name)
    tw = build_twin(g, "X", "Y")
    v = decide(g, "X", "Y", all_external(g))
    plans = [v.plan] if isinstance(v, Natural) else list(getattr(v, "plans", ()))
    for plan in plans:
        assert plan.replay(g, tw)
        # only the natural check may be recorded as failing
        failed = [s.check for s in plan.derivation if s.check and not s.check.result]
        assert all(c.z == () and c.graph == "twin" for c in failed)
    body = verdict_to_json(v, "X", "Y")
    assert body["kind"] == v.kind
    assert "subset" in body["interpretation"]


@pytest.mark.parametrize("name", sorted(SOURCES))
def test_natural_means_no_directed_path_between_y_and_s(name):
    g = load(name)
    if check_natural(g, "X", "Y"):
        assert not g.has_directed_path("Y", "S")
        assert not g.has_directed_path("S", "Y")


def _legal_additions(g):
    for a in sorted(g.nodes):
        if g.kind(a) is NodeKind.SELECTION:
            continue
        for b in sorted(g.nodes):
            if a == b or g.kind(b) is NodeKind.EXOGENOUS or (a, b) in g.edges:
                continue
            if g.has_directed_path(b, a):
                continue
            yield a, b


@pytest.mark.parametrize("name", sorted(SOURCES))
def test_failure_survives_edge_additions(name):
    g = load(name)
    for regime in (DataRegime(), all_external(g)):
        if not isinstance(decide(g, "X", "Y", regime), Failure):
            continue
        for a, b in _legal_additions(g):
            assert isinstance(decide(g.with_edge(a, b), "X", "Y", regime), Failure), (a, b)


@given(selection_graphs())
def test_verdict_consistent(g):
    regime = all_external(g)
    v = decide(g, "X", "Y", regime)
    tw = build_twin(g, "X", "Y")
    if isinstance(v, Natural):
        assert check_natural(g, "X", "Y")
    elif isinstance(v, RecoverableWith):
        assert not check_natural(g, "X", "Y")
        for plan in v.plans:
            assert plan.replay(g, tw)
            assert d_separated(tw.graph, "S", "Y*", plan.adjustment_set)
    else:
        # with every covariate external, failure means no separator exists
        cands = [u for u in g.endogenous if u not in ("X", "Y")]
        assert find_admissible_sets(g, "X", "Y", cands) == []


def test_implicit_exogenous_graph_decides():
    g = parse_graph("node X endo; node Y endo; node W endo; node S sel; edge W -> X; edge X -> Y; edge W -> S")
    assert check_natural(g, "X", "Y")
    assert not check_natural(g.with_edge("W", "Y"), "X", "Y")
