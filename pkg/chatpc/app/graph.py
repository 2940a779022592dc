#!/usr/bin/env python3
"""Causal graph types, d-separation, CPDAGs and graph comparison"""

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import (Callable, Dict, FrozenSet, Iterable, List, Optional,
                    Sequence, Set, Tuple, Union)

import networkx as nx
import numpy as np

from chatpc.utils.errors import (CycleDetected, DuplicateEdge, GraphError,
                                 InvalidQuery, NodeSetMismatch,
                                 OrientationConflict, SelfLoop, UnknownNode)
from chatpc.utils.logger import Logger

from .labels import CiLabel
from .metrics import MetricsReport

logger_instance = Logger("__graph__")
logger = logger_instance.get_logger()

Edge = Tuple[str, str]
Pair = FrozenSet[str]

# observer(action, edge, detail) receives orientation events
Observer = Callable[[str, Edge, str], None]


def pair(a: str, b: str) -> Pair:
    return frozenset((a, b))


def sorted_pair(p: Pair) -> Tuple[str, str]:
    a, b = sorted(p)
    return a, b


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph over named variables.

    Construct through Dag.from_edges to get validation; the plain
    constructor is used internally on already validated data.
    """

    nodes: Tuple[str, ...]
    edges: FrozenSet[Edge] = field(default_factory=frozenset)

    @classmethod
    def from_edges(cls, nodes: Sequence[str], edges: Iterable[Sequence[str]]):
        edge_list = [tuple(edge) for edge in edges]
        seen: Set[Edge] = set()
        for edge in edge_list:
            if len(edge) != 2:
                raise GraphError(f"Edge {list(edge)} must have two endpoints")
            if edge in seen:
                raise DuplicateEdge(f"Duplicate edge {edge[0]} -> {edge[1]}")
            seen.add(edge)
        dag = cls(tuple(nodes), frozenset(edge_list))
        validate_dag(dag)
        return dag

    @cached_property
    def parents(self) -> Dict[str, FrozenSet[str]]:
        found: Dict[str, Set[str]] = {n: set() for n in self.nodes}
        for parent, child in self.edges:
            found.setdefault(child, set()).add(parent)
        return {n: frozenset(p) for n, p in found.items()}

    @cached_property
    def children(self) -> Dict[str, FrozenSet[str]]:
        found: Dict[str, Set[str]] = {n: set() for n in self.nodes}
        for parent, child in self.edges:
            found.setdefault(parent, set()).add(child)
        return {n: frozenset(c) for n, c in found.items()}

    def ancestral_closure(self, seeds: Iterable[str]) -> Set[str]:
        """seeds together with all of their ancestors"""
        closure = set(seeds)
        stack = list(closure)
        while stack:
            node = stack.pop()
            for parent in self.parents[node]:
                if parent not in closure:
                    closure.add(parent)
                    stack.append(parent)
        return closure

    def descendants(self, node: str) -> Set[str]:
        found: Set[str] = set()
        stack = [node]
        while stack:
            for child in self.children[stack.pop()]:
                if child not in found:
                    found.add(child)
                    stack.append(child)
        return found

    def adjacent(self, a: str, b: str) -> bool:
        return (a, b) in self.edges or (b, a) in self.edges

    def skeleton_pairs(self) -> FrozenSet[Pair]:
        return frozenset(pair(u, v) for u, v in self.edges)

    def v_structures(self) -> Set[Tuple[str, str, str]]:
        """(a, collider, b) with a < b, a -> collider <- b, a and b non-adjacent"""
        found = set()
        for collider in self.nodes:
            for a, b in combinations(sorted(self.parents[collider]), 2):
                if not self.adjacent(a, b):
                    found.add((a, collider, b))
        return found

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(self.nodes)
        graph.add_edges_from(self.edges)
        return graph


@dataclass(frozen=True)
class Pdag:
    """Partially directed graph; a node pair is at most one kind of edge"""

    nodes: Tuple[str, ...]
    directed: FrozenSet[Edge] = field(default_factory=frozenset)
    undirected: FrozenSet[Pair] = field(default_factory=frozenset)

    def __post_init__(self):
        known = set(self.nodes)
        pairs_seen: Set[Pair] = set()
        for u, v in self.directed:
            if u == v:
                raise SelfLoop(f"Self-loop on {u}")
            if u not in known or v not in known:
                raise UnknownNode(f"Edge {u} -> {v} uses an undeclared node")
            if pair(u, v) in pairs_seen:
                raise GraphError(f"Pair {u}, {v} carries more than one edge")
            pairs_seen.add(pair(u, v))
        for p in self.undirected:
            if len(p) != 2:
                raise SelfLoop(f"Undirected self-loop on {set(p)}")
            if not p <= known:
                raise UnknownNode(f"Edge {sorted(p)} uses an undeclared node")
            if p in pairs_seen:
                raise GraphError(f"Pair {sorted(p)} carries more than one edge")
            pairs_seen.add(p)

    @classmethod
    def from_dag(cls, dag: Dag) -> "Pdag":
        return cls(dag.nodes, frozenset(dag.edges), frozenset())

    @classmethod
    def undirected_from_pairs(cls, nodes: Sequence[str], pairs: Iterable[Pair]):
        return cls(tuple(nodes), frozenset(), frozenset(pairs))

    def adjacent(self, a: str, b: str) -> bool:
        return (
            (a, b) in self.directed
            or (b, a) in self.directed
            or pair(a, b) in self.undirected
        )

    def neighbors(self, node: str) -> Set[str]:
        found = {v for u, v in self.directed if u == node}
        found |= {u for u, v in self.directed if v == node}
        for p in self.undirected:
            if node in p:
                found |= p - {node}
        return found

    def skeleton_pairs(self) -> FrozenSet[Pair]:
        return frozenset(pair(u, v) for u, v in self.directed) | self.undirected

    def skeleton(self) -> "Pdag":
        return Pdag(self.nodes, frozenset(), self.skeleton_pairs())

    def v_structures(self) -> Set[Tuple[str, str, str]]:
        parents: Dict[str, Set[str]] = {n: set() for n in self.nodes}
        for u, v in self.directed:
            parents[v].add(u)
        found = set()
        for collider, incoming in parents.items():
            for a, b in combinations(sorted(incoming), 2):
                if not self.adjacent(a, b):
                    found.add((a, collider, b))
        return found

    def same_structure(self, other: "Pdag") -> bool:
        """Equality ignoring node order"""
        return (
            set(self.nodes) == set(other.nodes)
            and self.directed == other.directed
            and self.undirected == other.undirected
        )


GraphLike = Union[Dag, Pdag]


def as_pdag(graph: GraphLike) -> Pdag:
    if isinstance(graph, Dag):
        return Pdag.from_dag(graph)
    return graph


def validate_dag(dag: Dag) -> None:
    """Raise unless dag has declared endpoints, no self-loops and no cycles"""
    if len(set(dag.nodes)) != len(dag.nodes):
        raise GraphError("Node names must be unique")
    known = set(dag.nodes)
    for parent, child in sorted(dag.edges):
        if parent == child:
            raise SelfLoop(f"Self-loop on {parent}")
        for endpoint in (parent, child):
            if endpoint not in known:
                raise UnknownNode(
                    f"Edge {parent} -> {child} uses undeclared node {endpoint}"
                )
    try:
        cycle = nx.find_cycle(dag.to_networkx(), orientation="original")
    except nx.NetworkXNoCycle:
        return
    raise CycleDetected([(u, v) for u, v, _ in cycle])


def d_separated(dag: Dag, x: str, y: str, z: Iterable[str]) -> bool:
    """True iff x and y are d-separated by z in dag.

    Works on the moralized ancestral subgraph of {x, y} | z: x and y are
    d-separated iff every path between them there passes through z.
    """
    conditioning = set(z)
    known = set(dag.nodes)
    for node in {x, y} | conditioning:
        if node not in known:
            raise InvalidQuery(f"Unknown node {node}")
    if x == y:
        raise InvalidQuery("x and y must differ")
    if x in conditioning or y in conditioning:
        raise InvalidQuery("x and y must not be in the conditioning set")

    relevant = dag.ancestral_closure({x, y} | conditioning)
    moral: Dict[str, Set[str]] = {node: set() for node in relevant}
    for child in relevant:
        parents = dag.parents[child]
        for parent in parents:
            moral[parent].add(child)
            moral[child].add(parent)
        for a, b in combinations(parents, 2):
            moral[a].add(b)
            moral[b].add(a)

    seen = {x}
    stack = [x]
    while stack:
        for neighbor in moral[stack.pop()]:
            if neighbor == y:
                return False
            if neighbor in seen or neighbor in conditioning:
                continue
            seen.add(neighbor)
            stack.append(neighbor)
    return True


class _WorkingPdag:
    """Mutable orientation state used while closing a Pdag under Meek rules"""

    def __init__(self, pdag: Pdag):
        self.nodes = pdag.nodes
        self.directed: Set[Edge] = set(pdag.directed)
        self.undirected: Set[Pair] = set(pdag.undirected)

    def adjacent(self, a: str, b: str) -> bool:
        return (
            (a, b) in self.directed
            or (b, a) in self.directed
            or pair(a, b) in self.undirected
        )

    def parents(self, node: str) -> Set[str]:
        return {u for u, v in self.directed if v == node}

    def children(self, node: str) -> Set[str]:
        return {v for u, v in self.directed if u == node}

    def undirected_neighbors(self, node: str) -> Set[str]:
        found: Set[str] = set()
        for p in self.undirected:
            if node in p:
                found |= p - {node}
        return found

    def has_directed_path(self, source: str, target: str) -> bool:
        seen = {source}
        stack = [source]
        while stack:
            for child in self.children(stack.pop()):
                if child == target:
                    return True
                if child not in seen:
                    seen.add(child)
                    stack.append(child)
        return False

    def orient(self, tail: str, head: str) -> None:
        self.undirected.discard(pair(tail, head))
        self.directed.add((tail, head))

    def freeze(self) -> Pdag:
        return Pdag(self.nodes, frozenset(self.directed), frozenset(self.undirected))


def _meek_rule(work: _WorkingPdag, u: str, v: str) -> Optional[str]:
    """Name of the first Meek rule that demands u -> v for the edge u - v"""
    # R1: a -> u - v, a and v non-adjacent
    for a in work.parents(u):
        if a != v and not work.adjacent(a, v):
            return "R1"
    # R2: u -> w -> v
    for w in work.children(u):
        if (w, v) in work.directed:
            return "R2"
    # R3: u - c -> v and u - d -> v, c and d non-adjacent
    incoming = [c for c in work.undirected_neighbors(u) if (c, v) in work.directed]
    for c, d in combinations(sorted(incoming), 2):
        if not work.adjacent(c, d):
            return "R3"
    # R4: u - d -> c -> v, u adjacent to c, d and v non-adjacent
    for d in work.undirected_neighbors(u):
        if d == v or work.adjacent(d, v):
            continue
        for c in work.children(d):
            if c != u and (c, v) in work.directed and work.adjacent(u, c):
                return "R4"
    return None


def _orientation_is_safe(work: _WorkingPdag, tail: str, head: str) -> bool:
    if work.has_directed_path(head, tail):
        return False
    for other in work.parents(head):
        if other != tail and not work.adjacent(other, tail):
            return False
    return True


def apply_meek_rules(
    pdag: Pdag,
    observer: Optional[Observer] = None,
    conflict_policy: str = "log",
) -> Pdag:
    """Close pdag under Meek rules R1-R4.

    Only undirected edges are ever oriented. An edge whose two orientations
    are both demanded, or whose orientation would close a directed cycle or
    create a new v-structure, is left undirected and reported as a conflict
    (or raised when conflict_policy is "raise").
    """
    work = _WorkingPdag(pdag)
    blocked: Set[Pair] = set()

    while True:
        progress = False
        for edge in sorted(work.undirected, key=sorted_pair):
            if edge in blocked:
                continue
            a, b = sorted_pair(edge)
            forward, backward = _meek_rule(work, a, b), _meek_rule(work, b, a)
            if forward is None and backward is None:
                continue
            if forward and backward:
                reason = f"both {a} -> {b} ({forward}) and {b} -> {a} ({backward})"
            else:
                tail, head, rule = (a, b, forward) if forward else (b, a, backward)
                if _orientation_is_safe(work, tail, head):
                    work.orient(tail, head)
                    if observer is not None:
                        observer("meek_applied", (tail, head), rule)
                    progress = True
                    break
                reason = f"{rule} orientation {tail} -> {head} is not acyclic or adds a v-structure"
            blocked.add(edge)
            if conflict_policy == "raise":
                raise OrientationConflict(f"Conflict on {a} - {b}: {reason}")
            logger.warning(f"Orientation conflict on {a} - {b}: {reason}")
            if observer is not None:
                observer("orientation_conflict", (a, b), reason)
        if not progress:
            return work.freeze()


def cpdag_of(dag: Dag) -> Pdag:
    """CPDAG of dag: skeleton, v-structures oriented, Meek closure"""
    validate_dag(dag)
    directed: Set[Edge] = set()
    for a, collider, b in dag.v_structures():
        directed.add((a, collider))
        directed.add((b, collider))
    undirected = {pair(u, v) for u, v in dag.edges if (u, v) not in directed}
    return apply_meek_rules(Pdag(dag.nodes, frozenset(directed), frozenset(undirected)))


def _check_same_nodes(a: GraphLike, b: GraphLike) -> None:
    if set(a.nodes) != set(b.nodes):
        raise NodeSetMismatch(
            f"Node sets differ: {sorted(set(a.nodes) ^ set(b.nodes))}"
        )


def skeleton_metrics(predicted: GraphLike, truth: Dag) -> MetricsReport:
    """Adjacency recovery over all unordered pairs; true edges are positives"""
    _check_same_nodes(predicted, truth)
    predicted_pairs = as_pdag(predicted).skeleton_pairs()
    true_pairs = truth.skeleton_pairs()
    counts = {"tp": 0, "fp": 0, "tn": 0, "fn": 0}
    for a, b in combinations(sorted(truth.nodes), 2):
        actual = pair(a, b) in true_pairs
        guessed = pair(a, b) in predicted_pairs
        if actual and guessed:
            counts["tp"] += 1
        elif guessed:
            counts["fp"] += 1
        elif actual:
            counts["fn"] += 1
        else:
            counts["tn"] += 1
    return MetricsReport(positive_class=CiLabel.DEPENDENT, **counts)


def _pair_status(graph: Pdag, a: str, b: str):
    if (a, b) in graph.directed:
        return ("directed", a, b)
    if (b, a) in graph.directed:
        return ("directed", b, a)
    if pair(a, b) in graph.undirected:
        return ("undirected",)
    return ("absent",)


def shd(a: GraphLike, b: GraphLike) -> int:
    """Structural Hamming distance; a reversed edge counts once"""
    _check_same_nodes(a, b)
    left, right = as_pdag(a), as_pdag(b)
    return sum(
        _pair_status(left, u, v) != _pair_status(right, u, v)
        for u, v in combinations(sorted(left.nodes), 2)
    )


def _quote(name: str) -> str:
    return '"' + name.replace('"', '\\"') + '"'


def to_dot(graph: GraphLike, name: str = "G") -> str:
    """DOT text. Graphs with a directed edge are a `digraph`, others a
    `graph`; undirected edges are always `--` with dir=none."""
    pdag = as_pdag(graph)
    directed_kind = bool(pdag.directed)
    lines = [f"{'digraph' if directed_kind else 'graph'} {_quote(name)} {{"]
    for node in pdag.nodes:
        lines.append(f"  {_quote(node)};")
    for u, v in sorted(pdag.directed):
        lines.append(f"  {_quote(u)} -> {_quote(v)};")
    for p in sorted(pdag.undirected, key=sorted_pair):
        u, v = sorted_pair(p)
        lines.append(f"  {_quote(u)} -- {_quote(v)} [dir=none];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_to_dict(graph: GraphLike) -> Dict[str, List]:
    pdag = as_pdag(graph)
    return {
        "nodes": list(pdag.nodes),
        "directed": [list(edge) for edge in sorted(pdag.directed)],
        "undirected": [
            list(sorted_pair(p)) for p in sorted(pdag.undirected, key=sorted_pair)
        ],
    }


def graph_from_dict(payload: Dict[str, List]) -> Pdag:
    return Pdag(
        tuple(payload["nodes"]),
        frozenset(tuple(edge) for edge in payload.get("directed", [])),
        frozenset(pair(*edge) for edge in payload.get("undirected", [])),
    )


def random_dag(n: int, edge_prob: float, seed: int, prefix: str = "V") -> Dag:
    """Random DAG: random causal order, each forward pair kept with edge_prob"""
    rng = np.random.default_rng(seed)
    nodes = tuple(f"{prefix}{i}" for i in range(n))
    order = [nodes[i] for i in rng.permutation(n)]
    edges = [
        (order[i], order[j])
        for i, j in combinations(range(n), 2)
        if rng.random() < edge_prob
    ]
    return Dag(nodes, frozenset(edges))
