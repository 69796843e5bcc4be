import pytest
from hypothesis import given

from conftest import selection_graphs
from twinrecover.dsep import path_is_active
from twinrecover.fixtures import SOURCES, load
from twinrecover.graph import GraphError, NodeKind, parse_graph
from twinrecover.twin import build_twin, star


def _size_ok(g, tw):
    non_exo = [v for v in g.nodes if g.kind(v) is not NodeKind.EXOGENOUS]
    return len(tw.graph) == 2 * len(non_exo) + len(g.exogenous)


def test_fig1_twin_topology():
    tw = build_twin(load("fig1"), "X", "Y")
    t = tw.graph
    assert len(t) == 9
    assert {("X*", "Y*"), ("X*", "S*"), ("U_Y", "Y"), ("U_Y", "Y*"), ("U_S", "S"), ("U_S", "S*")} <= t.edges
    assert t.parents("X*") == frozenset()
    assert t.parents("Y*") == {"X*", "U_Y"}
    # the factual treatment keeps its exogenous parent
    assert t.parents("X") == {"U_X"}
    assert t.target == ("X*", "Y*")
    assert (tw.intervention, tw.outcome, tw.selection) == ("X*", "Y*", "S")


def test_smallest_twin():
    g = parse_graph("node X endo; node Y endo; node S sel; edge X -> Y; edge Y -> S")
    t = build_twin(g, "X", "Y").graph
    assert t.parents("Y*") == {"X*", "U_Y"}


def test_fig3c_twin():
    g = load("fig3c")
    tw = build_twin(g, "X", "Y")
    t = tw.graph
    non_exo = [v for v in t.nodes if t.kind(v) is not NodeKind.EXOGENOUS]
    assert len(non_exo) == 14
    assert len(t.exogenous) == 7
    assert t.parents("X*") == frozenset()
    assert ("W1", "X") in t.edges and ("W1*", "X*") not in t.edges
    assert ("U_X", "X*") not in t.edges


def test_fig2b_confounder_path_active():
    t = build_twin(load("fig2b"), "X", "Y").graph
    assert path_is_active(t, ["S", "X", "W", "U_W", "W*", "Y*"], [])


@pytest.mark.parametrize(
    "x,y,msg",
    [("X", "X", "must differ"), ("U_X", "Y", "not an endogenous"), ("X", "S", "not an endogenous"), ("X", "Q", "not an endogenous")],
)
def test_bad_targets(x, y, msg):
    with pytest.raises(GraphError, match=msg):
        build_twin(load("fig1"), x, y)


def test_needs_selection_node():
    g = parse_graph("node X endo; node Y endo; edge X -> Y")
    with pytest.raises(GraphError, match="no selection node"):
        build_twin(g, "X", "Y")


@pytest.mark.parametrize("name", sorted(SOURCES))
def test_fixture_invariants(name):
    g = load(name)
    tw = build_twin(g, "X", "Y")
    assert _size_ok(g, tw)
    assert tw.factual_half == g
    assert build_twin(tw.factual_half, "X", "Y") == tw
    _assert_cut(tw)


def _assert_cut(tw):
    # without exogenous nodes no edge joins the two halves
    t = tw.graph
    for a, b in t.edges:
        if t.kind(a) is NodeKind.EXOGENOUS:
            continue
        assert a.endswith("*") == b.endswith("*"), (a, b)


@given(selection_graphs())
def test_random_invariants(g):
    tw = build_twin(g, "X", "Y")
    t = tw.graph
    assert _size_ok(g, tw)
    assert tw.factual_half == g
    _assert_cut(tw)
    assert t.parents("X*") == frozenset()
    for v in g.nodes:
        if g.kind(v) is NodeKind.EXOGENOUS or v == "X":
            continue
        # every copy keeps its parents, starred, with exogenous ones shared
        expect = {p if g.kind(p) is NodeKind.EXOGENOUS else star(p) for p in g.parents(v)}
        assert t.parents(star(v)) == expect
        assert tw.factual_of[star(v)] == v
