#!/usr/bin/env python3
"""PC algorithm against any CI oracle: skeleton, colliders, Meek closure"""

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Dict, List, Optional, Sequence, Set, Tuple

from chatpc.utils.errors import OrientationConflict, QueryBudgetExceeded
from chatpc.utils.logger import Logger

from .aggregate import Decision
from .graph import Edge, Pair, Pdag, apply_meek_rules, pair, sorted_pair
from .labels import Outcome
from .oracle import CiOracle, oracle_query
from .problems import CiQuery, Problem

logger_instance = Logger("__pc__")
logger = logger_instance.get_logger()

SepSets = Dict[Pair, Tuple[str, ...]]

EDGE_REMOVED = "edge_removed"
EDGE_KEPT = "edge_kept"
COLLIDER_ORIENTED = "collider_oriented"
MEEK_APPLIED = "meek_applied"
ORIENTATION_CONFLICT = "orientation_conflict"
BACKGROUND = "background"


@dataclass(frozen=True)
class PcOptions:
    max_cond_size: Optional[int] = None
    stable: bool = True
    orient: bool = True
    query_budget: Optional[int] = None
    undecided_as: str = "dependent"
    jobs: int = 1
    background: Tuple[Edge, ...] = ()
    conflict_policy: str = "log"

    def __post_init__(self):
        if self.max_cond_size is not None and self.max_cond_size < 0:
            raise ValueError("max_cond_size must be non-negative")
        if self.query_budget is not None and self.query_budget < 0:
            raise ValueError("query_budget must be non-negative")
        if self.undecided_as not in ("dependent", "independent"):
            raise ValueError("undecided_as must be 'dependent' or 'independent'")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        if self.conflict_policy not in ("log", "raise"):
            raise ValueError("conflict_policy must be 'log' or 'raise'")
        object.__setattr__(self, "background", tuple(tuple(e) for e in self.background))

    def to_dict(self) -> Dict[str, object]:
        return {
            "max_cond_size": self.max_cond_size,
            "stable": self.stable,
            "orient": self.orient,
            "query_budget": self.query_budget,
            "undecided_as": self.undecided_as,
            "background": [list(e) for e in self.background],
            "conflict_policy": self.conflict_policy,
        }


@dataclass(frozen=True)
class TraceEntry:
    action: str
    query: Optional[CiQuery] = None
    decision: Optional[Decision] = None
    edge: Optional[Tuple[str, ...]] = None
    sepset: Optional[Tuple[str, ...]] = None
    detail: str = ""

    def to_dict(self) -> Dict[str, object]:
        payload: Dict[str, object] = {"action": self.action}
        if self.query is not None:
            payload["query"] = self.query.to_dict()
        if self.decision is not None:
            payload["decision"] = self.decision.to_dict()
        if self.edge is not None:
            payload["edge"] = list(self.edge)
        if self.sepset is not None:
            payload["sepset"] = list(self.sepset)
        if self.detail:
            payload["detail"] = self.detail
        return payload


@dataclass
class PcTrace:
    entries: List[TraceEntry] = field(default_factory=list)
    total_queries: int = 0
    # per level: conditioning size, query ceiling from frozen adjacency, queries run
    level_bounds: List[Dict[str, int]] = field(default_factory=list)

    def add(self, action: str, **kwargs) -> None:
        self.entries.append(TraceEntry(action, **kwargs))

    def observe(self, action: str, edge: Edge, detail: str) -> None:
        """Observer hook for apply_meek_rules"""
        self.add(action, edge=tuple(edge), detail=detail)

    def of_action(self, action: str) -> List[TraceEntry]:
        return [entry for entry in self.entries if entry.action == action]

    def to_dict(self) -> Dict[str, object]:
        return {
            "total_queries": self.total_queries,
            "levels": list(self.level_bounds),
            "entries": [entry.to_dict() for entry in self.entries],
        }


class _Budget:
    def __init__(self, limit: Optional[int]):
        self.limit = limit
        self.used = 0
        self._lock = threading.Lock()

    def take(self) -> None:
        with self._lock:
            if self.limit is not None and self.used >= self.limit:
                raise QueryBudgetExceeded(f"Query budget of {self.limit} exhausted")
            self.used += 1


@dataclass
class _PairResult:
    tests: List[Tuple[CiQuery, Decision]]
    sepset: Optional[Tuple[str, ...]] = None
    exhausted: bool = False


def _separates(decision: Decision, opts: PcOptions) -> bool:
    if decision.outcome is Outcome.INDEPENDENT:
        return True
    return decision.outcome is Outcome.UNDECIDED and opts.undecided_as == "independent"


def _test_pair(
    problem: Problem,
    oracle: CiOracle,
    opts: PcOptions,
    budget: _Budget,
    adjacency: Dict[str, Set[str]],
    x: str,
    y: str,
    level: int,
) -> _PairResult:
    """Test x _||_ y | Z for Z drawn from adj(x) \\ {y}, then from adj(y) \\ {x}"""
    order = {name: i for i, name in enumerate(problem.variable_names)}
    result = _PairResult(tests=[])
    tested: Set[Tuple[str, ...]] = set()
    for a, b in ((x, y), (y, x)):
        candidates = sorted(adjacency[a] - {b}, key=order.__getitem__)
        for subset in combinations(candidates, level):
            # a set shared by both neighbourhoods is asked once
            if subset in tested:
                continue
            tested.add(subset)
            q = CiQuery(x, y, subset)
            try:
                budget.take()
            except QueryBudgetExceeded:
                result.exhausted = True
                return result
            decision = oracle_query(oracle, problem, q).decision
            result.tests.append((q, decision))
            if _separates(decision, opts):
                result.sepset = subset
                return result
    return result


def _level_ceiling(adjacency: Dict[str, Set[str]], pairs, level: int) -> int:
    return sum(
        comb(len(adjacency[x] - {y}), level) + comb(len(adjacency[y] - {x}), level)
        for x, y in pairs
    )


def pc_skeleton(
    problem: Problem, oracle: CiOracle, opts: PcOptions = PcOptions()
) -> Tuple[Pdag, SepSets, PcTrace]:
    """Skeleton search from the complete graph, level by level.

    With stable=True the adjacency sets are frozen at the start of each
    level and removals are applied at its end in declaration order, so
    jobs > 1 gives the same result as a serial run.
    """
    nodes = problem.variable_names
    adjacency: Dict[str, Set[str]] = {n: set(nodes) - {n} for n in nodes}
    sepsets: SepSets = {}
    trace = PcTrace()
    budget = _Budget(opts.query_budget)

    def partial() -> Pdag:
        return Pdag.undirected_from_pairs(
            nodes, {pair(u, v) for u in nodes for v in adjacency[u]}
        )

    level = 0
    while opts.max_cond_size is None or level <= opts.max_cond_size:
        frozen = {n: set(adjacency[n]) for n in nodes}
        pairs = [
            (x, y)
            for i, x in enumerate(nodes)
            for y in nodes[i + 1:]
            if y in adjacency[x]
            and (len(frozen[x] - {y}) >= level or len(frozen[y] - {x}) >= level)
        ]
        if not pairs:
            break
        ceiling = _level_ceiling(frozen, pairs, level)
        logger.info(f"Level {level}: {len(pairs)} adjacent pair(s), at most {ceiling} queries")
        used_before = budget.used

        exhausted = False
        if opts.stable:
            if opts.jobs > 1:
                with ThreadPoolExecutor(max_workers=opts.jobs) as pool:
                    futures = [
                        pool.submit(
                            _test_pair, problem, oracle, opts, budget, frozen, x, y, level
                        )
                        for x, y in pairs
                    ]
                    results = [future.result() for future in futures]
            else:
                results = []
                for x, y in pairs:
                    results.append(
                        _test_pair(problem, oracle, opts, budget, frozen, x, y, level)
                    )
                    if results[-1].exhausted:
                        break
            for (x, y), result in zip(pairs, results):
                exhausted |= _apply_result(result, x, y, adjacency, sepsets, trace)
        else:
            for x, y in pairs:
                if y not in adjacency[x]:
                    continue
                result = _test_pair(problem, oracle, opts, budget, adjacency, x, y, level)
                exhausted |= _apply_result(result, x, y, adjacency, sepsets, trace)
                if exhausted:
                    break

        trace.total_queries = budget.used
        trace.level_bounds.append(
            {"level": level, "ceiling": ceiling, "queries": budget.used - used_before}
        )
        if exhausted:
            skeleton = partial()
            raise QueryBudgetExceeded(
                f"Query budget of {opts.query_budget} exhausted at level {level}",
                skeleton=skeleton,
                sepsets=dict(sepsets),
                trace=trace,
            )
        level += 1

    return partial(), sepsets, trace


def _apply_result(
    result: _PairResult,
    x: str,
    y: str,
    adjacency: Dict[str, Set[str]],
    sepsets: SepSets,
    trace: PcTrace,
) -> bool:
    last = len(result.tests) - 1
    for index, (q, decision) in enumerate(result.tests):
        # a separating test is always the last one run for the pair
        removed = result.sepset is not None and index == last
        if removed:
            adjacency[x].discard(y)
            adjacency[y].discard(x)
            sepsets[pair(x, y)] = tuple(result.sepset)
            logger.info(f"Removed {x} - {y} given {list(result.sepset)}")
            trace.add(
                EDGE_REMOVED, query=q, decision=decision, edge=(x, y), sepset=q.z
            )
        else:
            trace.add(EDGE_KEPT, query=q, decision=decision, edge=(x, y))
    return result.exhausted


def orient_v_structures(
    skeleton: Pdag,
    sepsets: SepSets,
    trace: Optional[PcTrace] = None,
    conflict_policy: str = "log",
) -> Pdag:
    """Orient x -> c <- y for every unshielded x - c - y with c outside sepset(x, y).

    An edge demanded in both directions stays undirected.
    """
    demanded: Set[Edge] = set()
    colliders: List[Tuple[str, str, str]] = []
    for c in skeleton.nodes:
        neighbours = [n for n in skeleton.nodes if n in skeleton.neighbors(c)]
        for a, b in combinations(neighbours, 2):
            if skeleton.adjacent(a, b):
                continue
            if c in sepsets.get(pair(a, b), ()):
                continue
            demanded.update({(a, c), (b, c)})
            colliders.append((a, c, b))

    directed: Set[Edge] = set(skeleton.directed)
    undirected: Set[Pair] = set(skeleton.undirected)
    conflicts: Set[Pair] = set()
    for u, v in sorted(demanded):
        edge = pair(u, v)
        if edge not in undirected:
            continue
        if (v, u) in demanded:
            if edge not in conflicts:
                conflicts.add(edge)
                a, b = sorted_pair(edge)
                detail = f"colliders demand both {a} -> {b} and {b} -> {a}"
                if conflict_policy == "raise":
                    raise OrientationConflict(detail)
                logger.warning(f"Orientation conflict: {detail}")
                if trace is not None:
                    trace.add(ORIENTATION_CONFLICT, edge=(a, b), detail=detail)
            continue
        undirected.discard(edge)
        directed.add((u, v))

    if trace is not None:
        for a, c, b in colliders:
            if (a, c) in directed and (b, c) in directed:
                trace.add(COLLIDER_ORIENTED, edge=(a, c, b))
    return Pdag(skeleton.nodes, frozenset(directed), frozenset(undirected))


def _inject_background(
    pdag: Pdag, background: Sequence[Edge], trace: PcTrace, conflict_policy: str
) -> Pdag:
    directed = set(pdag.directed)
    undirected = set(pdag.undirected)
    for parent, child in background:
        edge = pair(parent, child)
        if edge in undirected:
            undirected.discard(edge)
            directed.add((parent, child))
            trace.add(BACKGROUND, edge=(parent, child))
        elif (child, parent) in directed:
            detail = f"background {parent} -> {child} contradicts {child} -> {parent}"
            if conflict_policy == "raise":
                raise OrientationConflict(detail)
            logger.warning(detail)
            trace.add(ORIENTATION_CONFLICT, edge=(parent, child), detail=detail)
        elif (parent, child) not in directed:
            logger.warning(f"Background edge {parent} -> {child} is not in the skeleton")
    return Pdag(pdag.nodes, frozenset(directed), frozenset(undirected))


def run_pc(
    problem: Problem, oracle: CiOracle, opts: PcOptions = PcOptions()
) -> Tuple[Pdag, PcTrace]:
    skeleton, sepsets, trace = pc_skeleton(problem, oracle, opts)
    if not opts.orient:
        return skeleton, trace
    pdag = orient_v_structures(skeleton, sepsets, trace, opts.conflict_policy)
    if opts.background:
        pdag = _inject_background(pdag, opts.background, trace, opts.conflict_policy)
    pdag = apply_meek_rules(pdag, observer=trace.observe, conflict_policy=opts.conflict_policy)
    return pdag, trace
