#!/usr/bin/env python3
"""Turn batches of parsed answers into CI decisions"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Optional, Sequence

from scipy.special import bdtrc, ndtr

from chatpc.utils.errors import NoDecisiveAnswers, UnknownPolicy

from .labels import Outcome
from .prompt import RawAnswer, Verdict

# weight of a YES/NO answer that reported no percentage
DEFAULT_WEIGHT = 0.5

EXACT = "exact"
NORMAL = "normal"
TESTS = (EXACT, NORMAL)

MAJORITY = "majority"
WEIGHTED = "weighted"
STATISTICAL = "statistical"
UNANIMOUS = "unanimous"
ORACLE = "oracle"
GSQ = "gsq"
METHODS = (MAJORITY, WEIGHTED, STATISTICAL, UNANIMOUS, ORACLE, GSQ)


class NullHypothesis(str, Enum):
    NULL_INDEPENDENT = "indep"  # H0: p_yes >= p_no
    NULL_DEPENDENT = "dep"  # H0: p_no >= p_yes


@dataclass(frozen=True)
class VoteTally:
    n_total: int = 0
    n_yes: int = 0
    n_no: int = 0
    n_uncertain: int = 0

    def __post_init__(self):
        if min(self.n_total, self.n_yes, self.n_no, self.n_uncertain) < 0:
            raise ValueError("Vote counts must be non-negative")
        if self.n_yes + self.n_no + self.n_uncertain != self.n_total:
            raise ValueError("n_yes + n_no + n_uncertain must equal n_total")

    @classmethod
    def of(cls, n_yes: int = 0, n_no: int = 0, n_uncertain: int = 0) -> "VoteTally":
        return cls(n_yes + n_no + n_uncertain, n_yes, n_no, n_uncertain)

    @property
    def decisive(self) -> int:
        return self.n_yes + self.n_no

    def no_yes(self) -> str:
        return f"{self.n_no}-{self.n_yes}"

    def to_dict(self) -> Dict[str, int]:
        return {
            "n_total": self.n_total,
            "n_yes": self.n_yes,
            "n_no": self.n_no,
            "n_uncertain": self.n_uncertain,
        }


@dataclass(frozen=True)
class Decision:
    outcome: Outcome
    method: str
    p_value: Optional[float] = None
    alpha: Optional[float] = None
    tally: VoteTally = VoteTally()

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"Unknown decision method '{self.method}'")
        carries_p = self.method in (STATISTICAL, GSQ)
        if carries_p != (self.p_value is not None):
            raise ValueError(f"p_value must be present iff method is {STATISTICAL} or {GSQ}")
        if self.p_value is not None and not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p_value {self.p_value} outside [0, 1]")

    def to_dict(self) -> Dict[str, object]:
        return {
            "outcome": self.outcome.value,
            "method": self.method,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "tally": self.tally.to_dict(),
        }


def tally(answers: Iterable[RawAnswer]) -> VoteTally:
    counts = {Verdict.YES: 0, Verdict.NO: 0, Verdict.UNCERTAIN: 0}
    for answer in answers:
        counts[answer.verdict] += 1
    return VoteTally.of(counts[Verdict.YES], counts[Verdict.NO], counts[Verdict.UNCERTAIN])


def symmetrize(t_xy: VoteTally, t_yx: VoteTally) -> VoteTally:
    return VoteTally(
        t_xy.n_total + t_yx.n_total,
        t_xy.n_yes + t_yx.n_yes,
        t_xy.n_no + t_yx.n_no,
        t_xy.n_uncertain + t_yx.n_uncertain,
    )


def _compare(yes, no) -> Outcome:
    if yes > no:
        return Outcome.INDEPENDENT
    if no > yes:
        return Outcome.DEPENDENT
    return Outcome.UNDECIDED


def decide_majority(t: VoteTally) -> Decision:
    return Decision(_compare(t.n_yes, t.n_no), MAJORITY, tally=t)


def decide_weighted(answers: Sequence[RawAnswer]) -> Decision:
    """Confidence-weighted vote; UNCERTAIN answers carry no mass"""
    mass = {Verdict.YES: 0.0, Verdict.NO: 0.0}
    for answer in answers:
        if answer.verdict in mass:
            weight = DEFAULT_WEIGHT if answer.confidence is None else answer.confidence
            mass[answer.verdict] += weight
    yes, no = round(mass[Verdict.YES], 12), round(mass[Verdict.NO], 12)
    return Decision(_compare(yes, no), WEIGHTED, tally=tally(answers))


def decide_unanimous(t: VoteTally) -> Decision:
    """Dependence only when every answer says NO"""
    if t.n_total == 0:
        outcome = Outcome.UNDECIDED
    elif t.n_no == t.n_total:
        outcome = Outcome.DEPENDENT
    else:
        outcome = Outcome.INDEPENDENT
    return Decision(outcome, UNANIMOUS, tally=t)


def p_value(t: VoteTally, h0: NullHypothesis, method: str = EXACT) -> float:
    """One-sided p-value of the vote split against h0.

    exact: upper binomial tail P(Bin(m, 1/2) >= k) over the decisive answers.
    normal: unpooled normal approximation with proportions over n_total.
    """
    h0 = NullHypothesis(h0)
    if method == EXACT:
        if t.decisive < 1:
            raise NoDecisiveAnswers("The exact test needs at least one YES or NO answer")
        k = t.n_no if h0 is NullHypothesis.NULL_INDEPENDENT else t.n_yes
        if k <= 0:
            return 1.0
        return float(min(1.0, max(0.0, bdtrc(k - 1, t.decisive, 0.5))))

    if method == NORMAL:
        if t.decisive < 2:
            raise NoDecisiveAnswers("The normal test needs at least two YES or NO answers")
        p_no, p_yes = t.n_no / t.n_total, t.n_yes / t.n_total
        if h0 is NullHypothesis.NULL_INDEPENDENT:
            difference = p_no - p_yes
        else:
            difference = p_yes - p_no
        variance = (p_no + p_yes - (p_no - p_yes) ** 2) / t.n_total
        if variance <= 0:
            return 1.0 if difference <= 0 else 0.0
        z = difference / math.sqrt(variance)
        return float(min(1.0, max(0.0, ndtr(-z))))

    raise UnknownPolicy(f"Unknown test '{method}' (expected one of {TESTS})")


def decide_statistical(
    t: VoteTally, h0: NullHypothesis, alpha: float = 0.05, method: str = EXACT
) -> Decision:
    h0 = NullHypothesis(h0)
    p = p_value(t, h0, method)
    rejected = p <= alpha
    if h0 is NullHypothesis.NULL_INDEPENDENT:
        outcome = Outcome.DEPENDENT if rejected else Outcome.INDEPENDENT
    else:
        outcome = Outcome.INDEPENDENT if rejected else Outcome.DEPENDENT
    return Decision(outcome, STATISTICAL, p_value=p, alpha=alpha, tally=t)


@dataclass(frozen=True)
class DecisionPolicy:
    method: str = MAJORITY
    h0: NullHypothesis = NullHypothesis.NULL_INDEPENDENT
    alpha: float = 0.05
    test: str = EXACT

    def __post_init__(self):
        if self.method not in (MAJORITY, WEIGHTED, STATISTICAL, UNANIMOUS):
            raise UnknownPolicy(f"Unknown decision policy '{self.method}'")
        object.__setattr__(self, "h0", NullHypothesis(self.h0))
        if self.method == STATISTICAL:
            if self.test not in TESTS:
                raise UnknownPolicy(f"Unknown test '{self.test}'")
            if not 0.0 < self.alpha < 1.0:
                raise ValueError("alpha must lie strictly between 0 and 1")

    @property
    def name(self) -> str:
        if self.method != STATISTICAL:
            return self.method
        return f"stat_{self.h0.value}_{self.test}"

    def to_dict(self) -> Dict[str, object]:
        payload: Dict[str, object] = {"name": self.name, "method": self.method}
        if self.method == STATISTICAL:
            payload.update(h0=self.h0.value, alpha=self.alpha, test=self.test)
        return payload


def parse_policy(name: str, alpha: float = 0.05) -> DecisionPolicy:
    """Policy from its name: majority, weighted, unanimous or stat_<h0>_<test>"""
    name = name.strip()
    if name in (MAJORITY, WEIGHTED, UNANIMOUS):
        return DecisionPolicy(name)
    parts = name.split("_")
    if len(parts) == 3 and parts[0] == "stat":
        try:
            return DecisionPolicy(STATISTICAL, NullHypothesis(parts[1]), alpha, parts[2])
        except ValueError:
            pass
    raise UnknownPolicy(f"Unknown decision policy '{name}'")


def decide(policy: DecisionPolicy, answers: Sequence[RawAnswer]) -> Decision:
    if policy.method == WEIGHTED:
        return decide_weighted(answers)
    counts = tally(answers)
    if policy.method == MAJORITY:
        return decide_majority(counts)
    if policy.method == UNANIMOUS:
        return decide_unanimous(counts)
    return decide_statistical(counts, policy.h0, policy.alpha, policy.test)
