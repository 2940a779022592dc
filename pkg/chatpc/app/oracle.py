#!/usr/bin/env python3
"""CI oracles: d-separation, LLM-backed, seeded-noisy, G² on data, cached"""

import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import Dict, Optional, Tuple

from chatpc.utils.hashing import unit_interval
from chatpc.utils.logger import Logger

from .aggregate import (GSQ, ORACLE, Decision, DecisionPolicy, VoteTally, decide,
                        symmetrize, tally)
from .ai_providers import RECORD, AIProvider, LlmConfig, complete_batch
from .cassette import CassetteStore
from .gsq import SampleTable, gsq_p_value
from .labels import CiLabel, Outcome
from .problems import CiQuery, Problem, ground_truth_label
from .prompt import RawAnswer, build_prompt, parse_completions

logger_instance = Logger("__oracle__")
logger = logger_instance.get_logger()

SOURCES = ("dsep", "llm", "noisy", "gsq", "cached")

Answers = Tuple[RawAnswer, ...]


@dataclass(frozen=True)
class OracleVerdict:
    decision: Decision
    source: str
    direction_tallies: Optional[Tuple[VoteTally, VoteTally]] = None
    answers: Optional[Tuple[Answers, ...]] = None

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"Unknown verdict source '{self.source}'")
        if self.direction_tallies is not None and self.source not in ("llm", "cached"):
            raise ValueError("Per-direction tallies only come from the llm oracle")

    @property
    def outcome(self) -> Outcome:
        return self.decision.outcome

    def to_dict(self) -> Dict[str, object]:
        payload: Dict[str, object] = {
            "source": self.source,
            "decision": self.decision.to_dict(),
        }
        if self.direction_tallies is not None:
            payload["direction_tallies"] = [t.to_dict() for t in self.direction_tallies]
        return payload


@dataclass(frozen=True)
class NoiseSpec:
    false_independence_rate: float = 0.0
    false_dependence_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for rate in (self.false_independence_rate, self.false_dependence_rate):
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"Noise rate {rate} outside [0, 1]")


def _label_outcome(label: CiLabel) -> Outcome:
    return Outcome(label.value)


class CiOracle(ABC):
    """Answers "is x independent of y given z" for a problem"""

    source: str = ""

    @abstractmethod
    def query(self, problem: Problem, q: CiQuery) -> OracleVerdict:
        pass


class DsepOracle(CiOracle):
    """Perfect oracle: d-separation in the problem's ground-truth graph"""

    source = "dsep"

    def query(self, problem: Problem, q: CiQuery) -> OracleVerdict:
        outcome = _label_outcome(ground_truth_label(problem, q))
        return OracleVerdict(Decision(outcome, ORACLE), self.source)


class NoisyOracle(CiOracle):
    """d-separation with seeded per-class flips.

    Whether a statement flips depends only on (seed, unordered query), so
    (x, y) and (y, x) agree and parallel runs match serial ones.
    """

    source = "noisy"

    def __init__(self, noise: NoiseSpec):
        self.noise = noise

    def flips(self, problem: Problem, q: CiQuery, truth: CiLabel) -> bool:
        rate = (
            self.noise.false_independence_rate
            if truth is CiLabel.DEPENDENT
            else self.noise.false_dependence_rate
        )
        if rate <= 0.0:
            return False
        a, b, z = q.unordered_key()
        return unit_interval(self.noise.seed, "noisy", problem.id, a, b, list(z)) < rate

    def query(self, problem: Problem, q: CiQuery) -> OracleVerdict:
        truth = ground_truth_label(problem, q)
        answered = truth
        if self.flips(problem, q, truth):
            answered = (
                CiLabel.INDEPENDENT if truth is CiLabel.DEPENDENT else CiLabel.DEPENDENT
            )
        return OracleVerdict(Decision(_label_outcome(answered), ORACLE), self.source)


class LlmOracle(CiOracle):
    """Asks the model n times per direction and aggregates under a policy"""

    source = "llm"

    def __init__(
        self,
        llm_config: LlmConfig,
        policy: DecisionPolicy = DecisionPolicy(),
        symmetrize_orders: bool = True,
        cassette: Optional[CassetteStore] = None,
        mode: str = RECORD,
        provider: Optional[AIProvider] = None,
    ):
        self.config = llm_config
        self.policy = policy
        self.symmetrize_orders = symmetrize_orders
        self.cassette = cassette
        self.mode = mode
        self.provider = provider

    def _ask(self, problem: Problem, q: CiQuery) -> Answers:
        prompt = build_prompt(problem, q)
        texts = complete_batch(
            self.config, prompt, self.cassette, self.mode, self.provider
        )
        return tuple(parse_completions(texts))

    def query(self, problem: Problem, q: CiQuery) -> OracleVerdict:
        forward = self._ask(problem, q)
        if not self.symmetrize_orders:
            return OracleVerdict(
                decide(self.policy, forward), self.source, answers=(forward,)
            )
        backward = self._ask(problem, q.swapped())
        decision = decide(self.policy, forward + backward)
        tallies = (tally(forward), tally(backward))
        logger.debug(
            f"{q}: {tallies[0].no_yes()} + {tallies[1].no_yes()} (NO-YES) -> "
            f"{decision.outcome.value}"
        )
        return OracleVerdict(
            decision, self.source, direction_tallies=tallies, answers=(forward, backward)
        )


class GsqOracle(CiOracle):
    """G² test on a discrete sample table whose columns are the variables"""

    source = "gsq"

    def __init__(self, data: SampleTable, alpha: float = 0.05, min_rows: int = 10):
        self.data = data
        self.alpha = alpha
        self.min_rows = min_rows

    def query(self, problem: Problem, q: CiQuery) -> OracleVerdict:
        return gsq_ci_test(self.data, q, self.alpha, self.min_rows)


class CachedOracle(CiOracle):
    """Memoizes another oracle by the unordered canonical query"""

    source = "cached"

    def __init__(self, inner: CiOracle):
        self.inner = inner
        self._cache: Dict[Tuple, OracleVerdict] = {}
        self._lock = threading.Lock()
        self.hits = 0

    def query(self, problem: Problem, q: CiQuery) -> OracleVerdict:
        key = (problem.id, q.unordered_key())
        with self._lock:
            cached = self._cache.get(key)
            if cached is not None:
                self.hits += 1
                return replace(cached, source=self.source)
        verdict = self.inner.query(problem, q)
        with self._lock:
            self._cache.setdefault(key, verdict)
        return verdict


def gsq_ci_test(
    data: SampleTable, q: CiQuery, alpha: float = 0.05, min_rows: int = 10
) -> OracleVerdict:
    """INDEPENDENT iff the chi-square upper tail of G² exceeds alpha"""
    p = gsq_p_value(data, q, min_rows)
    outcome = Outcome.INDEPENDENT if p > alpha else Outcome.DEPENDENT
    return OracleVerdict(Decision(outcome, GSQ, p_value=p, alpha=alpha), "gsq")


def oracle_query(oracle: CiOracle, problem: Problem, q: CiQuery) -> OracleVerdict:
    problem.require_query(q)
    return oracle.query(problem, q)


def llm_oracle_query(
    llm_config: LlmConfig,
    decision_policy: DecisionPolicy,
    symmetrize_orders: bool,
    problem: Problem,
    q: CiQuery,
    cassette: Optional[CassetteStore] = None,
    mode: str = RECORD,
    provider: Optional[AIProvider] = None,
) -> OracleVerdict:
    oracle = LlmOracle(
        llm_config, decision_policy, symmetrize_orders, cassette, mode, provider
    )
    return oracle_query(oracle, problem, q)


def combined_tally(verdict: OracleVerdict) -> VoteTally:
    """All answers behind a verdict, both directions summed"""
    if verdict.direction_tallies is not None:
        return symmetrize(*verdict.direction_tallies)
    return verdict.decision.tally
