"""Selection-augmented causal DAGs and their text format."""

from __future__ import annotations

import enum
import re
from collections import deque
from typing import Iterable, Mapping


class GraphError(ValueError):
    """Raised for malformed or invalid graphs.

    ``line`` and ``column`` are 1-based positions into the source text when the
    error comes from the parser, otherwise ``None``.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class CycleError(GraphError):
    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("cycle detected: " + " -> ".join(cycle))


class NodeKind(enum.Enum):
    ENDOGENOUS = "endo"
    EXOGENOUS = "exo"
    SELECTION = "sel"


def node_set(names: Iterable[str]) -> tuple[str, ...]:
    """Sorted, deduplicated tuple of node names."""
    return tuple(sorted(set(names)))


class CausalGraph:
    """Immutable DAG over kinded nodes.

    Parameters
    ----------
    nodes:
        Mapping from node name to :class:`NodeKind`.
    edges:
        Iterable of ``(parent, child)`` pairs.
    target:
        Optional ``(x, y)`` intervention/outcome pair declared by the source file.
    counterfactual:
        Set by the twin builder only. Allows starred names and a second
        selection node (the copy ``S*``).
    """

    def __init__(
        self,
        nodes: Mapping[str, NodeKind],
        edges: Iterable[tuple[str, str]],
        target: tuple[str, str] | None = None,
        *,
        implicit_exogenous: bool = False,
        counterfactual: bool = False,
    ):
        self._nodes = dict(nodes)
        self._edges = frozenset((str(a), str(b)) for a, b in edges)
        self.target = tuple(target) if target is not None else None
        self.implicit_exogenous = implicit_exogenous
        self.counterfactual = counterfactual

        self._parents: dict[str, set[str]] = {v: set() for v in self._nodes}
        self._children: dict[str, set[str]] = {v: set() for v in self._nodes}
        for a, b in self._edges:
            for end in (a, b):
                if end not in self._nodes:
                    raise GraphError(f"unknown node {end!r} in edge {a} -> {b}")
            if a == b:
                raise CycleError([a, a])
            self._parents[b].add(a)
            self._children[a].add(b)
        self._validate()
        self._order = self._toposort()
        # descendants are precomputed once; d-separation queries only read them
        self._descendants: dict[str, frozenset[str]] = {}
        for v in reversed(self._order):
            acc = {v}
            for c in self._children[v]:
                acc |= self._descendants[c]
            self._descendants[v] = frozenset(acc)

    # -- validation -----------------------------------------------------------

    def _validate(self) -> None:
        if not self._nodes:
            raise GraphError("no nodes declared")
        selection = [v for v, k in self._nodes.items() if k is NodeKind.SELECTION]
        if len(selection) > (2 if self.counterfactual else 1):
            raise GraphError("multiple selection nodes: " + ", ".join(sorted(selection)))
        for v, kind in self._nodes.items():
            if not self.counterfactual and "*" in v:
                raise GraphError(f"node name {v!r} contains reserved character '*'")
            if kind is NodeKind.EXOGENOUS and self._parents[v]:
                raise GraphError(f"exogenous node {v!r} has a parent")
            if kind is NodeKind.SELECTION and self._children[v]:
                raise GraphError(f"selection node {v!r} has children")
        if self.target is not None:
            x, y = self.target
            for v in (x, y):
                if v not in self._nodes:
                    raise GraphError(f"unknown node {v!r} in target")

    def _toposort(self) -> list[str]:
        indegree = {v: len(p) for v, p in self._parents.items()}
        queue = deque(sorted(v for v, d in indegree.items() if d == 0))
        order = []
        while queue:
            v = queue.popleft()
            order.append(v)
            for c in sorted(self._children[v]):
                indegree[c] -= 1
                if indegree[c] == 0:
                    queue.append(c)
        if len(order) != len(self._nodes):
            raise CycleError(self._find_cycle())
        return order

    def _find_cycle(self) -> list[str]:
        color = {v: 0 for v in self._nodes}
        stack: list[str] = []

        def dfs(v: str) -> list[str] | None:
            color[v] = 1
            stack.append(v)
            for c in sorted(self._children[v]):
                if color[c] == 1:
                    return stack[stack.index(c):] + [c]
                if color[c] == 0:
                    found = dfs(c)
                    if found:
                        return found
            color[v] = 2
            stack.pop()
            return None

        for v in sorted(self._nodes):
            if color[v] == 0:
                found = dfs(v)
                if found:
                    return found
        return []

    # -- accessors ------------------------------------------------------------

    @property
    def nodes(self) -> dict[str, NodeKind]:
        return dict(self._nodes)

    @property
    def edges(self) -> frozenset[tuple[str, str]]:
        return self._edges

    def __contains__(self, name: str) -> bool:
        return name in self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    def kind(self, v: str) -> NodeKind:
        self._check(v)
        return self._nodes[v]

    def parents(self, v: str) -> frozenset[str]:
        self._check(v)
        return frozenset(self._parents[v])

    def children(self, v: str) -> frozenset[str]:
        self._check(v)
        return frozenset(self._children[v])

    def descendants(self, v: str) -> frozenset[str]:
        """Nodes reachable from ``v`` by directed paths, including ``v``."""
        self._check(v)
        return self._descendants[v]

    def topological_order(self) -> list[str]:
        return list(self._order)

    def of_kind(self, kind: NodeKind) -> tuple[str, ...]:
        return node_set(v for v, k in self._nodes.items() if k is kind)

    @property
    def endogenous(self) -> tuple[str, ...]:
        return self.of_kind(NodeKind.ENDOGENOUS)

    @property
    def exogenous(self) -> tuple[str, ...]:
        return self.of_kind(NodeKind.EXOGENOUS)

    @property
    def selection(self) -> str | None:
        sel = self.of_kind(NodeKind.SELECTION)
        if not sel:
            return None
        # a twin carries S and S*; the factual one is the unstarred name
        plain = [s for s in sel if not s.endswith("*")]
        return plain[0] if plain else sel[0]

    def has_directed_path(self, a: str, b: str) -> bool:
        self._check(a)
        self._check(b)
        return b in self._descendants[a]

    def _check(self, v: str) -> None:
        if v not in self._nodes:
            raise GraphError(f"unknown node {v!r}")

    # -- derived graphs -------------------------------------------------------

    def with_edge(self, parent: str, child: str) -> CausalGraph:
        return CausalGraph(
            self._nodes,
            self._edges | {(parent, child)},
            self.target,
            implicit_exogenous=self.implicit_exogenous,
            counterfactual=self.counterfactual,
        )

    def without_edge(self, parent: str, child: str) -> CausalGraph:
        return CausalGraph(
            self._nodes,
            self._edges - {(parent, child)},
            self.target,
            implicit_exogenous=self.implicit_exogenous,
            counterfactual=self.counterfactual,
        )

    def subgraph(self, keep: Iterable[str]) -> CausalGraph:
        keep = set(keep)
        return CausalGraph(
            {v: k for v, k in self._nodes.items() if v in keep},
            [(a, b) for a, b in self._edges if a in keep and b in keep],
            self.target if self.target and set(self.target) <= keep else None,
            implicit_exogenous=self.implicit_exogenous,
            counterfactual=self.counterfactual,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CausalGraph):
            return NotImplemented
        return (
            self._nodes == other._nodes
            and self._edges == other._edges
            and self.target == other.target
        )

    def __hash__(self) -> int:
        return hash((frozenset(self._nodes.items()), self._edges, self.target))

    def __repr__(self) -> str:
        return f"CausalGraph({len(self._nodes)} nodes, {len(self._edges)} edges)"


def ancestors(g: CausalGraph, v: Iterable[str]) -> tuple[str, ...]:
    """Return ``v`` together with every node that has a directed path into ``v``."""
    seen: set[str] = set()
    stack = list(v)
    for name in stack:
        g._check(name)
    while stack:
        u = stack.pop()
        if u in seen:
            continue
        seen.add(u)
        stack.extend(g.parents(u))
    return node_set(seen)


# -- text format --------------------------------------------------------------

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*\*?"
_NODE_RE = re.compile(rf"node\s+({_IDENT})\s+(endo|exo|sel)")
_EDGE_RE = re.compile(rf"edge\s+({_IDENT})\s*->\s*({_IDENT})")
_TARGET_RE = re.compile(rf"target\s+({_IDENT})\s*->\s*({_IDENT})")


def _statements(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        col = 0
        for piece in line.split(";"):
            stripped = piece.strip()
            if stripped:
                yield lineno, col + len(piece) - len(piece.lstrip()) + 1, stripped
            col += len(piece) + 1


def parse_graph(text: str, *, allow_counterfactual: bool = False) -> CausalGraph:
    """Parse the line-oriented graph format.

    ::

        node X endo; node Y endo; node S sel
        edge X -> Y
        edge Y -> S
        target X -> Y

    Exogenous nodes are synthesized as ``U_<name>`` for every endogenous or
    selection node that has no exogenous parent in the file.
    """
    nodes: dict[str, NodeKind] = {}
    edges: list[tuple[str, str, int, int]] = []
    target = None
    for lineno, col, stmt in _statements(text):
        if m := _NODE_RE.fullmatch(stmt):
            name, kind = m.group(1), NodeKind(m.group(2))
            if "*" in name and not allow_counterfactual:
                raise GraphError(f"node name {name!r} contains reserved character '*'", lineno, col)
            if name in nodes:
                raise GraphError(f"node {name!r} declared twice", lineno, col)
            nodes[name] = kind
        elif m := _EDGE_RE.fullmatch(stmt):
            edges.append((m.group(1), m.group(2), lineno, col))
        elif m := _TARGET_RE.fullmatch(stmt):
            if target is not None:
                raise GraphError("target declared twice", lineno, col)
            target = (m.group(1), m.group(2))
        else:
            raise GraphError(f"syntax error: {stmt!r}", lineno, col)

    if not nodes:
        raise GraphError("no nodes declared")
    for a, b, lineno, col in edges:
        for end in (a, b):
            if end not in nodes:
                raise GraphError(f"unknown node {end!r} in edge", lineno, col)
        if nodes[b] is NodeKind.EXOGENOUS:
            raise GraphError(f"exogenous node {b!r} has a parent", lineno, col)
    if sum(k is NodeKind.SELECTION for k in nodes.values()) > (2 if allow_counterfactual else 1):
        raise GraphError("multiple selection nodes")

    edge_set = {(a, b) for a, b, _, _ in edges}
    implicit = False
    if not allow_counterfactual:
        has_exo_parent = {b for a, b in edge_set if nodes[a] is NodeKind.EXOGENOUS}
        for v, kind in sorted(nodes.items()):
            if kind is not NodeKind.EXOGENOUS and v not in has_exo_parent:
                u = f"U_{v}"
                if u in nodes:
                    raise GraphError(f"cannot synthesize exogenous parent {u!r}: name taken")
                implicit = True
                nodes[u] = NodeKind.EXOGENOUS
                edge_set.add((u, v))
    return CausalGraph(
        nodes,
        edge_set,
        target,
        implicit_exogenous=implicit,
        counterfactual=allow_counterfactual,
    )


def render_graph(g: CausalGraph) -> str:
    """Canonical text form; ``parse_graph(render_graph(g)) == g``."""
    order = {NodeKind.ENDOGENOUS: 0, NodeKind.SELECTION: 1, NodeKind.EXOGENOUS: 2}
    lines = [
        f"node {v} {k.value}"
        for v, k in sorted(g.nodes.items(), key=lambda item: (order[item[1]], item[0]))
    ]
    lines += [f"edge {a} -> {b}" for a, b in sorted(g.edges)]
    if g.target is not None:
        lines.append(f"target {g.target[0]} -> {g.target[1]}")
    return "\n".join(lines) + "\n"


def load_graph(path, *, allow_counterfactual: bool = False) -> CausalGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read(), allow_counterfactual=allow_counterfactual)
