"""Recoverability decisions for P(Y*_{X*}) under selection.

The natural check, the admissible-set search and the recursive RC routine all
reduce to d-separation queries. Every query that justified a decision is
recorded as a :class:`DsepCheck` so a plan can be replayed later.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .dsep import d_separated
from .graph import CausalGraph, GraphError, NodeKind, node_set
from .twin import TwinNetwork, build_twin

DEFAULT_MAX_SIZE = 4
DEFAULT_RC_DEPTH = 8

LOOP_INTERPRETATION = (
    "candidate sets Z range over subsets of the biased-measured set M; "
    "'Z in W' is read as Z being a subset of the external set"
)


class RCDepthExceeded(RuntimeError):
    """The RC recursion ran out of depth budget before reaching a verdict."""


@dataclass(frozen=True)
class DsepCheck:
    """A recorded d-separation query and the answer it produced."""

    graph: str  # "twin" or "factual"
    x: tuple[str, ...]
    y: tuple[str, ...]
    z: tuple[str, ...]
    result: bool

    def replay(self, g: CausalGraph, twin: TwinNetwork | None) -> bool:
        target = twin.graph if self.graph == "twin" else g
        return d_separated(target, self.x, self.y, self.z)

    def describe(self) -> str:
        rel = "_||_" if self.result else "not _||_"
        given = ",".join(self.z) or "{}"
        return f"{','.join(self.x)} {rel} {','.join(self.y)} | {given} [{self.graph}]"

    def to_json(self) -> dict:
        return {"graph": self.graph, "x": list(self.x), "y": list(self.y), "z": list(self.z), "result": self.result}


@dataclass(frozen=True)
class Step:
    text: str
    check: DsepCheck | None = None

    def to_json(self) -> dict:
        return {"text": self.text, "check": self.check.to_json() if self.check else None}


class PlanKind(enum.Enum):
    NATURAL = "natural"
    ADJUSTED = "adjusted"


@dataclass(frozen=True)
class RCPlan:
    """Tree-shaped record of how RC recovered P(w | z).

    ``step`` is the RC rule that fired (1-4). ``children`` holds the recursive
    calls that rule made.
    """

    step: int
    w: tuple[str, ...]
    z: tuple[str, ...]
    c: tuple[str, ...] = ()
    check: DsepCheck | None = None
    children: tuple[RCPlan, ...] = ()

    def steps(self) -> Iterator[Step]:
        given = ",".join(self.z)
        target = f"P({','.join(self.w)}{' | ' + given if given else ''})"
        if self.step == 1:
            yield Step(f"RC step 1: {target} read from external data")
        elif self.step == 2:
            yield Step(f"RC step 2: {target} = same conditional given S=1", self.check)
        elif self.step == 3:
            yield Step(f"RC step 3: {target} = sum over {','.join(self.c)} of P(.|.,c,S=1) P(c|z)", self.check)
        elif self.step == 4:
            yield Step(f"RC step 4: chain-rule split of {target}")
        for child in self.children:
            yield from child.steps()

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "w": list(self.w),
            "z": list(self.z),
            "c": list(self.c),
            "check": self.check.to_json() if self.check else None,
            "children": [c.to_json() for c in self.children],
        }


@dataclass(frozen=True)
class FormulaPlan:
    kind: PlanKind
    adjustment_set: tuple[str, ...]
    derivation: tuple[Step, ...]
    rc: RCPlan | None = None

    def __post_init__(self):
        if self.kind is PlanKind.NATURAL and self.adjustment_set:
            raise ValueError("a natural plan adjusts for nothing")

    def replay(self, g: CausalGraph, twin: TwinNetwork) -> bool:
        """Re-run every cited query; True when all reproduce their recorded answer."""
        return all(s.check.replay(g, twin) == s.check.result for s in self.derivation if s.check)

    def formula(self, y: str = "Y*", x: str = "X*") -> str:
        if self.kind is PlanKind.NATURAL:
            return f"P({y}_{x}) = P({y}_{x} | S=1)"
        z = ",".join(self.adjustment_set)
        return f"P({y}_{x}) = sum_{{{z}}} P({y}_{x} | {z}, S=1) P({z})"

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "adjustment_set": list(self.adjustment_set),
            "formula": self.formula(),
            "derivation": [s.to_json() for s in self.derivation],
            "rc": self.rc.to_json() if self.rc else None,
        }


@dataclass(frozen=True)
class DataRegime:
    """Which variables the analyst can use.

    ``biased_measured`` is recorded in the selected cohort; ``external_unbiased``
    has a population-level distribution. ``None`` for ``biased_measured`` means
    every endogenous variable.
    """

    biased_measured: tuple[str, ...] | None = None
    external_unbiased: tuple[str, ...] = ()

    def measured(self, g: CausalGraph) -> tuple[str, ...]:
        if self.biased_measured is None:
            return g.endogenous
        return node_set(self.biased_measured)

    def validate(self, g: CausalGraph) -> None:
        for v in (*(self.biased_measured or ()), *self.external_unbiased):
            if v not in g or g.kind(v) is not NodeKind.ENDOGENOUS:
                raise GraphError(f"regime variable {v!r} is not an endogenous node")


@dataclass(frozen=True)
class Natural:
    plan: FormulaPlan
    kind: str = "natural"


@dataclass(frozen=True)
class RecoverableWith:
    plans: tuple[FormulaPlan, ...]
    kind: str = "recoverable"

    @property
    def adjustment_sets(self) -> list[tuple[str, ...]]:
        return [p.adjustment_set for p in self.plans]


@dataclass(frozen=True)
class Failure:
    reason: str
    trace: tuple[Step, ...] = field(default=())
    kind: str = "failure"


Verdict = Natural | RecoverableWith | Failure


# -- natural recoverability check ---------------------------------------------


def _natural_check(twin: TwinNetwork) -> DsepCheck:
    result = d_separated(twin.graph, [twin.selection], [twin.outcome], ())
    return DsepCheck("twin", (twin.selection,), (twin.outcome,), (), result)


def check_natural(g: CausalGraph, x: str, y: str) -> bool:
    """S is d-separated from y* given nothing in the twin network."""
    return _natural_check(build_twin(g, x, y)).result


# -- admissible sets ----------------------------------------------------------


def _subsets(items: tuple[str, ...], max_size: int) -> Iterator[tuple[str, ...]]:
    for k in range(0, min(max_size, len(items)) + 1):
        yield from itertools.combinations(items, k)


def _candidate_check(g: CausalGraph, x: str, y: str, candidates: Iterable[str]) -> tuple[str, ...]:
    candidates = node_set(candidates)
    for v in candidates:
        if v not in g or g.kind(v) is not NodeKind.ENDOGENOUS:
            raise GraphError(f"candidate {v!r} is not an endogenous node")
        if v in (x, y):
            raise GraphError(f"candidate set may not contain the treatment or outcome ({v!r})")
    return candidates


def find_admissible_sets(
    g: CausalGraph,
    x: str,
    y: str,
    candidates: Iterable[str],
    max_size: int = DEFAULT_MAX_SIZE,
) -> list[tuple[str, ...]]:
    """Every ``z`` within ``candidates`` with S _||_ y* | z in the twin network.

    Sets contain factual names only. Results are ordered by size, then
    lexicographically, so minimal sets come first. The empty set is skipped
    because it is the natural case.
    """
    candidates = _candidate_check(g, x, y, candidates)
    twin = build_twin(g, x, y)
    found = []
    for z in _subsets(candidates, max_size):
        if z and d_separated(twin.graph, [twin.selection], [twin.outcome], z):
            found.append(z)
    return found


# -- RC -----------------------------------------------------------------------


def rc(
    g: CausalGraph,
    w: Iterable[str],
    z: Iterable[str],
    regime: DataRegime,
    depth_budget: int = DEFAULT_RC_DEPTH,
) -> RCPlan | None:
    """Try to recover P(w | z) from P(T) and P(M | S=1) on the factual graph.

    Returns the plan tree, or None for FAIL. Raises :class:`RCDepthExceeded`
    when the recursion needs more than ``depth_budget`` levels.
    """
    if depth_budget <= 0:
        raise ValueError("depth_budget must be positive")
    regime.validate(g)
    s = g.selection
    if s is None:
        raise GraphError("graph has no selection node")
    return _rc(g, s, node_set(w), node_set(z), regime, depth_budget)


def _rc(g, s, w, z, regime, budget) -> RCPlan | None:
    if budget <= 0:
        raise RCDepthExceeded(f"RC depth budget exhausted at P({','.join(w)} | {','.join(z)})")
    external = set(regime.external_unbiased)
    measured = set(regime.measured(g))

    # 1: everything needed is available without bias
    if set(w) | set(z) <= external:
        return RCPlan(1, w, z)

    # 2: selection is ignorable for this conditional
    if set(w) | set(z) <= measured:
        sep = d_separated(g, [s], w, z)
        if sep:
            return RCPlan(2, w, z, check=DsepCheck("factual", (s,), w, z, True))

    # 3: condition on a minimal extra set C
    pool = node_set(measured - set(w) - set(z)) if set(w) | set(z) <= measured else ()
    for c in _subsets(pool, len(pool)):
        if not c:
            continue
        if d_separated(g, [s], w, node_set(z + c)):
            check = DsepCheck("factual", (s,), w, node_set(z + c), True)
            if set(c) | set(z) <= external:
                return RCPlan(3, w, z, c, check, (RCPlan(1, c, z),))
            sub = _rc(g, s, c, z, regime, budget - 1)
            if sub is not None:
                return RCPlan(3, w, z, c, check, (sub,))
            break  # only the minimal C is tried

    # 4: chain rule P(w|z) = P(w'|w\w', z) P(w\w'|z)
    if len(w) > 1:
        for k in range(1, len(w)):
            for part in itertools.combinations(w, k):
                rest = node_set(set(w) - set(part))
                first = _rc(g, s, part, node_set(rest + z), regime, budget - 1)
                if first is None:
                    continue
                second = _rc(g, s, rest, z, regime, budget - 1)
                if second is not None:
                    return RCPlan(4, w, z, children=(first, second))

    # 5: FAIL
    return None


# -- adjustment search ---------------------------------------------------------


def decide(
    g: CausalGraph,
    x: str,
    y: str,
    regime: DataRegime | None = None,
    max_size: int = DEFAULT_MAX_SIZE,
    depth_budget: int = DEFAULT_RC_DEPTH,
) -> Verdict:
    """Natural, recoverable with a list of plans, or a failure value."""
    regime = regime or DataRegime()
    regime.validate(g)
    twin = build_twin(g, x, y)
    natural = _natural_check(twin)
    if natural.result:
        step = Step("S is d-separated from the counterfactual outcome given nothing", natural)
        return Natural(FormulaPlan(PlanKind.NATURAL, (), (step,)))

    first = Step("natural check failed", natural)
    candidates = node_set(set(regime.measured(g)) - {x, y})
    external = set(regime.external_unbiased)
    admissible = find_admissible_sets(g, x, y, candidates, max_size)
    if not admissible:
        return Failure("no admissible set", (first,))

    plans = []
    trace = [first]
    for zset in admissible:
        check = DsepCheck("twin", (twin.selection,), (twin.outcome,), zset, True)
        sep = Step(f"{{{','.join(zset)}}} separates S from {twin.outcome}", check)
        if set(zset) <= external:
            steps = (first, sep, Step("adjustment set is fully covered by external data"))
            plans.append(FormulaPlan(PlanKind.ADJUSTED, zset, steps))
            continue
        try:
            sub = _rc(g, twin.selection, zset, (), regime, depth_budget)
        except RCDepthExceeded as exc:
            trace.append(Step(f"{{{','.join(zset)}}}: {exc}"))
            continue
        if sub is None:
            trace.append(Step(f"{{{','.join(zset)}}}: RC failed to recover P({','.join(zset)})"))
            continue
        steps = (first, sep, Step(f"P({','.join(zset)}) recovered by RC"), *sub.steps())
        plans.append(FormulaPlan(PlanKind.ADJUSTED, zset, steps, sub))

    if not plans:
        return Failure("RC failed on all admissible sets", tuple(trace))
    return RecoverableWith(tuple(plans))


def verdict_to_json(v: Verdict, x: str, y: str) -> dict:
    out = {"kind": v.kind, "target": {"x": x, "y": y}, "interpretation": LOOP_INTERPRETATION}
    if isinstance(v, Natural):
        out["plans"] = [v.plan.to_json()]
    elif isinstance(v, RecoverableWith):
        out["plans"] = [p.to_json() for p in v.plans]
    else:
        out["plans"] = []
        out["reason"] = v.reason
        out["trace"] = [s.to_json() for s in v.trace]
    return out
