"""Twin-network construction with do-mutilation of the counterfactual treatment."""

from __future__ import annotations

from dataclasses import dataclass

from .graph import CausalGraph, GraphError, NodeKind


def star(v: str) -> str:
    return v + "*"


@dataclass(frozen=True)
class TwinNetwork:
    graph: CausalGraph
    factual_of: dict[str, str]
    intervention: str
    outcome: str
    selection: str

    @property
    def factual_half(self) -> CausalGraph:
        nodes = {v: k for v, k in self.graph.nodes.items() if not v.endswith("*")}
        edges = [(a, b) for a, b in self.graph.edges if a in nodes and b in nodes]
        target = (self.factual_of[self.intervention], self.factual_of[self.outcome])
        return CausalGraph(nodes, edges, target)

    def counterfactual_of(self, v: str) -> str:
        return star(v)


def build_twin(g: CausalGraph, x: str, y: str) -> TwinNetwork:
    """Pair every endogenous and selection node with a starred copy.

    Copies share the factual exogenous parents. Edges into the copy of ``x``
    are removed, including the exogenous one, so ``x*`` has in-degree 0.
    """
    for v in (x, y):
        if v not in g or g.kind(v) is not NodeKind.ENDOGENOUS:
            raise GraphError(f"{v!r} is not an endogenous node")
    if x == y:
        raise GraphError("intervention and outcome must differ")
    s = g.selection
    if s is None:
        raise GraphError("graph has no selection node")

    nodes = g.nodes
    copied = [v for v, k in nodes.items() if k is not NodeKind.EXOGENOUS]
    twin_nodes = dict(nodes)
    twin_nodes.update({star(v): nodes[v] for v in copied})
    edges = set(g.edges)
    x_star = star(x)
    for a, b in g.edges:
        if star(b) == x_star:
            continue
        if nodes[a] is NodeKind.EXOGENOUS:
            edges.add((a, star(b)))
        else:
            edges.add((star(a), star(b)))
    twin = CausalGraph(twin_nodes, edges, (x_star, star(y)), counterfactual=True)
    return TwinNetwork(
        graph=twin,
        factual_of={star(v): v for v in copied},
        intervention=x_star,
        outcome=star(y),
        selection=s,
    )
