"""d-separation: a linear-time reachability test and a path-enumeration oracle."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator

from .graph import CausalGraph, GraphError, ancestors, node_set


class OracleTooLarge(GraphError):
    pass


@dataclass(frozen=True)
class DsepQuery:
    x: tuple[str, ...]
    y: tuple[str, ...]
    z: tuple[str, ...] = ()

    @classmethod
    def of(cls, x: Iterable[str], y: Iterable[str], z: Iterable[str] = ()) -> DsepQuery:
        if isinstance(x, str):
            x = [x]
        if isinstance(y, str):
            y = [y]
        if isinstance(z, str):
            z = [z]
        return cls(node_set(x), node_set(y), node_set(z))

    def validate(self, g: CausalGraph) -> None:
        for v in (*self.x, *self.y, *self.z):
            if v not in g:
                raise GraphError(f"unknown node {v!r}")
        sx, sy, sz = set(self.x), set(self.y), set(self.z)
        if sx & sy or sx & sz or sy & sz:
            raise GraphError("query sets must be pairwise disjoint")


def _query(x, y, z) -> DsepQuery:
    if isinstance(x, DsepQuery):
        return x
    return DsepQuery.of(x, y, z)


def d_separated(g: CausalGraph, x, y=None, z=()) -> bool:
    """True iff ``z`` blocks every path between ``x`` and ``y`` in ``g``.

    Accepts either a :class:`DsepQuery` or the three node collections.
    """
    q = _query(x, y, z)
    q.validate(g)
    return not (reachable(g, q.x, q.z) & set(q.y))


def reachable(g: CausalGraph, sources: Iterable[str], z: Iterable[str]) -> set[str]:
    """Nodes connected to ``sources`` by an active trail given ``z``."""
    z = set(z)
    anc_z = set(ancestors(g, z))
    # (node, arrived_from_child): True means the ball travels up
    queue = deque((s, True) for s in sources)
    visited: set[tuple[str, bool]] = set()
    found: set[str] = set()
    while queue:
        v, up = queue.popleft()
        if (v, up) in visited:
            continue
        visited.add((v, up))
        if v not in z:
            found.add(v)
        if up:
            if v not in z:
                queue.extend((p, True) for p in g.parents(v))
                queue.extend((c, False) for c in g.children(v))
        else:
            if v not in z:
                queue.extend((c, False) for c in g.children(v))
            if v in anc_z:
                queue.extend((p, True) for p in g.parents(v))
    return found


# -- oracle -------------------------------------------------------------------

ORACLE_MAX_NODES = 20


def _simple_paths(g: CausalGraph, source: str, targets: set[str]) -> Iterator[list[str]]:
    neighbours = {v: sorted(g.parents(v) | g.children(v)) for v in g.nodes}
    path = [source]
    on_path = {source}

    def walk(v: str) -> Iterator[list[str]]:
        for w in neighbours[v]:
            if w in on_path:
                continue
            path.append(w)
            if w in targets:
                yield list(path)
            else:
                on_path.add(w)
                yield from walk(w)
                on_path.discard(w)
            path.pop()

    yield from walk(source)


def path_is_active(g: CausalGraph, path: list[str], z: Iterable[str]) -> bool:
    z = set(z)
    for i in range(1, len(path) - 1):
        prev, v, nxt = path[i - 1], path[i], path[i + 1]
        collider = prev in g.parents(v) and nxt in g.parents(v)
        if collider:
            if not (g.descendants(v) & z):
                return False
        elif v in z:
            return False
    return True


def active_paths(g: CausalGraph, q: DsepQuery) -> Iterator[list[str]]:
    targets = set(q.y)
    for s in q.x:
        for path in _simple_paths(g, s, targets):
            if path_is_active(g, path, q.z):
                yield path


def d_separated_oracle(g: CausalGraph, x, y=None, z=(), *, max_nodes: int = ORACLE_MAX_NODES) -> bool:
    """Exhaustive check of every simple undirected path; exponential in graph size."""
    if len(g) > max_nodes:
        raise OracleTooLarge(f"graph has {len(g)} nodes; oracle limit is {max_nodes}")
    q = _query(x, y, z)
    q.validate(g)
    return next(active_paths(g, q), None) is None


def explain(g: CausalGraph, x, y=None, z=()) -> list[str] | None:
    """One active path from ``x`` to ``y`` given ``z``, or None when separated."""
    q = _query(x, y, z)
    q.validate(g)
    if not (reachable(g, q.x, q.z) & set(q.y)):
        return None
    return next(active_paths(g, q))


def format_path(g: CausalGraph, path: list[str]) -> str:
    out = [path[0]]
    for a, b in zip(path, path[1:]):
        out.append("->" if b in g.children(a) else "<-")
        out.append(b)
    return " ".join(out)
