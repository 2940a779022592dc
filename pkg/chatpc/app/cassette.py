#!/usr/bin/env python3
"""Record/replay store for raw model completions, keyed by prompt fingerprint"""

import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib.resources import files
from typing import Dict, Iterator, List, Optional, Tuple

from chatpc.utils.errors import SchemaError, StoreIoError
from chatpc.utils.logger import Logger

from .problems import CiQuery, Problem
from .prompt import TEMPLATE_VERSION, prompt_fingerprint

logger_instance = Logger("__cassette__")
logger = logger_instance.get_logger()


def utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class CassetteEntry:
    fingerprint: str
    query: CiQuery
    model: str
    completions: Tuple[str, ...]
    created_at: str = field(default_factory=utc_now)
    problem_id: Optional[str] = None
    template_version: str = TEMPLATE_VERSION

    def __post_init__(self):
        object.__setattr__(self, "completions", tuple(self.completions))
        if not self.completions:
            raise ValueError("A cassette entry needs at least one completion")

    def to_dict(self) -> Dict[str, object]:
        return {
            "fingerprint": self.fingerprint,
            "problem_id": self.problem_id,
            "template_version": self.template_version,
            "query": self.query.to_dict(),
            "model": self.model,
            "completions": list(self.completions),
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, payload: Dict) -> "CassetteEntry":
        return cls(
            fingerprint=payload["fingerprint"],
            query=CiQuery.from_dict(payload["query"]),
            model=payload["model"],
            completions=tuple(payload["completions"]),
            created_at=payload["created_at"],
            problem_id=payload.get("problem_id"),
            template_version=payload.get("template_version", TEMPLATE_VERSION),
        )


class CassetteStore:
    """Append-only JSON-lines file with an in-memory index.

    Writes are serialized; the last entry recorded for a fingerprint wins.
    With path=None nothing touches the disk.
    """

    def __init__(self, path: Optional[str] = None):
        self.path = path
        self._index: Dict[str, CassetteEntry] = {}
        self._lock = threading.Lock()
        if path and os.path.exists(path):
            self._load()

    def _load(self) -> None:
        try:
            with open(self.path, "r", encoding="utf-8") as handle:
                lines = handle.read().splitlines()
        except OSError as error:
            raise StoreIoError(f"Cannot read cassette {self.path}: {error}")
        for number, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                entry = CassetteEntry.from_dict(json.loads(line))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as error:
                # a crash mid-append can only damage the final line
                if number == len(lines):
                    logger.warning(f"Ignoring truncated last line of {self.path}")
                    continue
                raise StoreIoError(f"{self.path}:{number}: bad cassette record ({error})")
            self._index[entry.fingerprint] = entry
        logger.debug(f"Loaded {len(self._index)} cassette entries from {self.path}")

    def record(self, entry: CassetteEntry) -> None:
        with self._lock:
            if self.path:
                line = json.dumps(entry.to_dict(), ensure_ascii=False, sort_keys=True)
                try:
                    directory = os.path.dirname(os.path.abspath(self.path))
                    os.makedirs(directory, exist_ok=True)
                    with open(self.path, "a", encoding="utf-8") as handle:
                        handle.write(line + "\n")
                        handle.flush()
                        os.fsync(handle.fileno())
                except OSError as error:
                    raise StoreIoError(f"Cannot write cassette {self.path}: {error}")
            self._index[entry.fingerprint] = entry

    def lookup(self, fingerprint: str) -> Optional[CassetteEntry]:
        with self._lock:
            entry = self._index.get(fingerprint)
        logger.debug(f"Cassette {'hit' if entry else 'miss'} for {fingerprint[:12]}")
        return entry

    def __len__(self) -> int:
        with self._lock:
            return len(self._index)

    def __iter__(self) -> Iterator[CassetteEntry]:
        with self._lock:
            return iter(list(self._index.values()))


def cassette_record(store: CassetteStore, entry: CassetteEntry) -> None:
    store.record(entry)


def cassette_lookup(store: CassetteStore, fingerprint: str) -> Optional[CassetteEntry]:
    return store.lookup(fingerprint)


# Vote fixtures: recorded NO/YES/UNCERTAIN counts per ordered query


def load_vote_fixture(name_or_path: str) -> Dict:
    """A bundled fixture name (e.g. "spurious") or a path to a fixture file"""
    if os.path.isfile(name_or_path):
        with open(name_or_path, "rb") as handle:
            raw = handle.read()
    else:
        resource = files("chatpc") / "data" / "votes" / f"{name_or_path}.json"
        if not resource.is_file():
            raise SchemaError("votes", f"no bundled vote fixture named '{name_or_path}'")
        raw = resource.read_bytes()
    try:
        fixture = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as error:
        raise SchemaError("votes", f"not a UTF-8 JSON document ({error})")
    if not isinstance(fixture.get("votes"), list):
        raise SchemaError("votes", "must be a list of vote records")
    return fixture


def _completion(q: CiQuery, verdict: str, confidence: int) -> str:
    given = f" given {', '.join(q.z)}" if q.z else ""
    return (
        f"Weighing what is known about {q.x} and {q.y}{given}, "
        f"the mechanisms linking them point one way.\n"
        f"Therefore, the answer is [{verdict} ({confidence}%)]"
    )


def synthesize_completions(q: CiQuery, no: int, yes: int, uncertain: int = 0,
                           confidence: int = 80) -> List[str]:
    texts = [_completion(q, "NO", confidence) for _ in range(no)]
    texts += [_completion(q, "YES", confidence) for _ in range(yes)]
    texts += [
        f"There is not enough known about {q.x} and {q.y} to say."
        for _ in range(uncertain)
    ]
    return texts


def synthesize_cassette(problem: Problem, fixture: Dict, store: CassetteStore) -> int:
    """Render recorded vote counts into completions under the real fingerprints"""
    if fixture.get("problem") not in (None, problem.id):
        raise SchemaError(
            "votes.problem",
            f"fixture is for '{fixture['problem']}', not '{problem.id}'",
        )
    model = fixture.get("model", "recorded")
    recorded_at = fixture.get("recorded_at", "1970-01-01T00:00:00Z")
    written = 0
    for index, vote in enumerate(fixture["votes"]):
        try:
            q = CiQuery(vote["x"], vote["y"], tuple(vote.get("z", ())))
            texts = synthesize_completions(
                q,
                int(vote.get("no", 0)),
                int(vote.get("yes", 0)),
                int(vote.get("uncertain", 0)),
                int(vote.get("confidence", 80)),
            )
        except KeyError as error:
            raise SchemaError(f"votes[{index}]", f"missing {error}")
        problem.require_query(q)
        store.record(
            CassetteEntry(
                fingerprint=prompt_fingerprint(problem, q),
                query=q,
                model=model,
                completions=tuple(texts),
                created_at=recorded_at,
                problem_id=problem.id,
            )
        )
        written += 1
    logger.debug(f"Synthesized {written} cassette entries for {problem.id}")
    return written
