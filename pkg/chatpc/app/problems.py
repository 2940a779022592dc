#!/usr/bin/env python3
"""Problem corpus: schema, loading, CI-statement enumeration and labels"""

import json
import os
from dataclasses import dataclass
from importlib.resources import files
from itertools import combinations
from typing import IO, Dict, List, Optional, Tuple, Union

from chatpc.utils.errors import (InvalidQuery, NoGroundTruth, SchemaError,
                                 UnknownVariable)
from chatpc.utils.logger import Logger

from .graph import Dag, d_separated
from .labels import CiLabel

logger_instance = Logger("__problems__")
logger = logger_instance.get_logger()

BUNDLED_PROBLEMS = (
    "cancer",
    "burglary",
    "asia",
    "sachs",
    "spurious",
    "bk-spv",
    "nao-dk-med",
)


@dataclass(frozen=True)
class Variable:
    name: str
    description: str


@dataclass(frozen=True)
class CiQuery:
    """Is x independent of y given z?"""

    x: str
    y: str
    z: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "z", tuple(self.z))
        if self.x == self.y:
            raise InvalidQuery(f"x and y must differ (got {self.x})")
        if self.x in self.z or self.y in self.z:
            raise InvalidQuery("x and y must not appear in the conditioning set")
        if len(set(self.z)) != len(self.z):
            raise InvalidQuery(f"Duplicate conditioning variables in {list(self.z)}")

    def canonical(self) -> "CiQuery":
        return CiQuery(self.x, self.y, tuple(sorted(self.z)))

    def swapped(self) -> "CiQuery":
        return CiQuery(self.y, self.x, self.z)

    def unordered_key(self) -> Tuple[str, str, Tuple[str, ...]]:
        a, b = sorted((self.x, self.y))
        return a, b, tuple(sorted(self.z))

    def variables(self) -> Tuple[str, ...]:
        return (self.x, self.y) + self.z

    def to_dict(self) -> Dict[str, object]:
        return {"x": self.x, "y": self.y, "z": list(self.z)}

    @classmethod
    def from_dict(cls, payload: Dict[str, object]) -> "CiQuery":
        return cls(payload["x"], payload["y"], tuple(payload.get("z", ())))

    def __str__(self) -> str:
        if not self.z:
            return f"{self.x} _||_ {self.y}"
        return f"{self.x} _||_ {self.y} | {', '.join(self.z)}"


@dataclass(frozen=True)
class Problem:
    id: str
    field: str
    context: str
    variables: Tuple[Variable, ...]
    ground_truth: Optional[Dag] = None
    notes: Optional[str] = None
    provenance: Optional[str] = None
    pairs: Tuple[Tuple[str, str], ...] = ()
    max_cond_size: Optional[int] = None

    @property
    def variable_names(self) -> Tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def variable(self, name: str) -> Variable:
        for variable in self.variables:
            if variable.name == name:
                return variable
        raise UnknownVariable(f"Unknown variable '{name}' in problem {self.id}")

    def require_query(self, q: CiQuery) -> None:
        for name in q.variables():
            self.variable(name)


def _require(payload: Dict, key: str, kind, where: str = ""):
    path = f"{where}{key}"
    if key not in payload:
        raise SchemaError(path, "is required")
    value = payload[key]
    if not isinstance(value, kind):
        raise SchemaError(path, f"must be of type {getattr(kind, '__name__', kind)}")
    if isinstance(value, str) and not value.strip():
        raise SchemaError(path, "must not be empty")
    return value


def problem_from_dict(payload: Dict) -> Problem:
    if not isinstance(payload, dict):
        raise SchemaError("<root>", "must be an object")
    problem_id = _require(payload, "id", str)
    field_name = _require(payload, "field", str)
    context = _require(payload, "context", str)
    raw_variables = _require(payload, "variables", list)

    variables: List[Variable] = []
    names = set()
    for index, raw in enumerate(raw_variables):
        where = f"variables[{index}]."
        if not isinstance(raw, dict):
            raise SchemaError(f"variables[{index}]", "must be an object")
        name = _require(raw, "name", str, where)
        description = _require(raw, "description", str, where)
        if name in names:
            raise SchemaError(f"{where}name", f"duplicate variable name '{name}'")
        names.add(name)
        variables.append(Variable(name, description))
    if len(variables) < 2:
        raise SchemaError("variables", "at least two variables are required")

    ground_truth = None
    if payload.get("ground_truth") is not None:
        truth = payload["ground_truth"]
        if not isinstance(truth, dict):
            raise SchemaError("ground_truth", "must be an object")
        edges = _require(truth, "edges", list, "ground_truth.")
        for index, edge in enumerate(edges):
            if not (isinstance(edge, list) and len(edge) == 2):
                raise SchemaError(
                    f"ground_truth.edges[{index}]", "must be a [parent, child] pair"
                )
        ground_truth = Dag.from_edges([v.name for v in variables], edges)

    pairs: List[Tuple[str, str]] = []
    for index, raw_pair in enumerate(payload.get("pairs") or []):
        if not (isinstance(raw_pair, list) and len(raw_pair) == 2):
            raise SchemaError(f"pairs[{index}]", "must be an [x, y] pair")
        for name in raw_pair:
            if name not in names:
                raise SchemaError(f"pairs[{index}]", f"unknown variable '{name}'")
        if raw_pair[0] == raw_pair[1]:
            raise SchemaError(f"pairs[{index}]", "x and y must differ")
        pairs.append((raw_pair[0], raw_pair[1]))

    max_cond_size = payload.get("max_cond_size")
    if max_cond_size is not None and (
        not isinstance(max_cond_size, int) or max_cond_size < 0
    ):
        raise SchemaError("max_cond_size", "must be a non-negative integer")

    return Problem(
        id=problem_id,
        field=field_name,
        context=context,
        variables=tuple(variables),
        ground_truth=ground_truth,
        notes=payload.get("notes"),
        provenance=payload.get("provenance"),
        pairs=tuple(pairs),
        max_cond_size=max_cond_size,
    )


def load_problem(source: Union[IO[bytes], bytes]) -> Problem:
    """Parse and validate a UTF-8 JSON problem document"""
    raw = source if isinstance(source, (bytes, bytearray)) else source.read()
    try:
        payload = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as error:
        raise SchemaError("<root>", f"not a UTF-8 JSON document ({error})")
    return problem_from_dict(payload)


def load_problem_file(path: str) -> Problem:
    with open(path, "rb") as handle:
        return load_problem(handle)


def bundled_problem_names() -> Tuple[str, ...]:
    return BUNDLED_PROBLEMS


def load_bundled_problem(name: str) -> Problem:
    resource = files("chatpc") / "data" / "problems" / f"{name}.json"
    if not resource.is_file():
        raise SchemaError("<root>", f"no bundled problem named '{name}'")
    return load_problem(resource.read_bytes())


def resolve_problem(name_or_path: str) -> Problem:
    """A bundled problem name or a path to a problem file"""
    if os.path.isfile(name_or_path):
        return load_problem_file(name_or_path)
    return load_bundled_problem(name_or_path)


def problem_to_dict(problem: Problem) -> Dict:
    payload: Dict[str, object] = {
        "id": problem.id,
        "field": problem.field,
        "context": problem.context,
        "variables": [
            {"name": v.name, "description": v.description} for v in problem.variables
        ],
    }
    if problem.ground_truth is not None:
        payload["ground_truth"] = {
            "edges": [list(edge) for edge in sorted(problem.ground_truth.edges)]
        }
    if problem.pairs:
        payload["pairs"] = [list(p) for p in problem.pairs]
    if problem.max_cond_size is not None:
        payload["max_cond_size"] = problem.max_cond_size
    if problem.provenance is not None:
        payload["provenance"] = problem.provenance
    if problem.notes is not None:
        payload["notes"] = problem.notes
    return payload


def dump_problem(problem: Problem) -> str:
    return json.dumps(problem_to_dict(problem), indent=2, ensure_ascii=False) + "\n"


def enumerate_ci_statements(
    problem: Problem,
    max_cond_size: Optional[int] = None,
    both_orders: bool = True,
) -> List[CiQuery]:
    """All (x, y, Z) with |Z| <= max_cond_size (None = unlimited).

    Ordered by x, then y (sorted by name), then conditioning-set size and
    combination rank.
    """
    names = sorted(problem.variable_names)
    largest = len(names) - 2
    if max_cond_size is not None:
        if max_cond_size < 0:
            raise ValueError("max_cond_size must be non-negative")
        if max_cond_size > largest:
            logger.debug(
                f"max_cond_size {max_cond_size} capped at {largest} for {problem.id}"
            )
        largest = min(largest, max_cond_size)

    statements: List[CiQuery] = []
    for i, x in enumerate(names):
        for j, y in enumerate(names):
            if i == j or (not both_orders and j < i):
                continue
            rest = [n for n in names if n not in (x, y)]
            for size in range(largest + 1):
                for subset in combinations(rest, size):
                    statements.append(CiQuery(x, y, subset))
    return statements


def benchmark_statements(
    problem: Problem,
    max_cond_size: Optional[int] = None,
    both_orders: bool = False,
) -> List[CiQuery]:
    """Statements evaluated for a problem: its marginal pairs when it lists
    any, otherwise every statement up to the problem's default cap."""
    if problem.pairs:
        statements = [CiQuery(x, y) for x, y in problem.pairs]
        if both_orders:
            statements += [q.swapped() for q in list(statements)]
        return statements
    cap = max_cond_size if max_cond_size is not None else problem.max_cond_size
    return enumerate_ci_statements(problem, cap, both_orders)


def ground_truth_label(problem: Problem, q: CiQuery) -> CiLabel:
    if problem.ground_truth is None:
        raise NoGroundTruth(f"Problem {problem.id} has no ground-truth graph")
    problem.require_query(q)
    if d_separated(problem.ground_truth, q.x, q.y, q.z):
        return CiLabel.INDEPENDENT
    return CiLabel.DEPENDENT
