#!/usr/bin/env python3
"""Benchmarks of CI oracles: metrics, direction consistency, spurious pairs"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from chatpc.utils.errors import MissingDirection, NoDecisiveAnswers, UnknownPolicy
from chatpc.utils.logger import Logger

from .aggregate import (EXACT, STATISTICAL, Decision, DecisionPolicy,
                        NullHypothesis, VoteTally, decide, decide_majority,
                        decide_statistical, symmetrize)
from .aggregate import tally as tally_answers
from .graph import Dag, GraphLike, shd, skeleton_metrics
from .labels import CiLabel, Outcome
from .metrics import MetricsReport
from .oracle import CiOracle, OracleVerdict, oracle_query
from .problems import (CiQuery, Problem, benchmark_statements,
                       ground_truth_label)
from .prompt import TEMPLATE_VERSION, Verdict

logger_instance = Logger("__evaluation__")
logger = logger_instance.get_logger()

REPORT_FORMAT = "chatpc-report/1"

CONSISTENCY_LABELS = (Verdict.YES, Verdict.NO, Verdict.UNCERTAIN)

_AS_VERDICT = {
    Outcome.INDEPENDENT: Verdict.YES,
    Outcome.DEPENDENT: Verdict.NO,
    Outcome.UNDECIDED: Verdict.UNCERTAIN,
}


@dataclass(frozen=True)
class CitRecord:
    query: CiQuery
    label: Optional[CiLabel]
    decisions: Dict[str, Decision]
    direction_decisions: Optional[Dict[str, Tuple[Decision, Decision]]] = None
    tally: Optional[VoteTally] = None
    direction_tallies: Optional[Tuple[VoteTally, VoteTally]] = None

    def decision(self, policy: str) -> Decision:
        try:
            return self.decisions[policy]
        except KeyError:
            raise UnknownPolicy(f"Record {self.query} has no decision for '{policy}'")

    def to_dict(self) -> Dict[str, object]:
        payload: Dict[str, object] = {
            "query": self.query.to_dict(),
            "label": self.label.value if self.label else None,
            "decisions": {k: d.to_dict() for k, d in sorted(self.decisions.items())},
        }
        if self.direction_decisions is not None:
            payload["direction_decisions"] = {
                k: [a.outcome.value, b.outcome.value]
                for k, (a, b) in sorted(self.direction_decisions.items())
            }
        if self.tally is not None:
            payload["tally"] = self.tally.to_dict()
        if self.direction_tallies is not None:
            payload["direction_tallies"] = [t.to_dict() for t in self.direction_tallies]
        return payload


@dataclass(frozen=True)
class ConsistencyMatrix:
    """Rows: outcome for (x, y); columns: outcome for (y, x)"""

    counts: Tuple[Tuple[int, int, int], ...]
    labels: Tuple[Verdict, ...] = CONSISTENCY_LABELS

    @property
    def total(self) -> int:
        return int(np.asarray(self.counts).sum())

    @property
    def agreement(self) -> Optional[float]:
        total = self.total
        if total == 0:
            return None
        return float(np.trace(np.asarray(self.counts))) / total

    def to_dict(self) -> Dict[str, object]:
        return {
            "labels": [label.value for label in self.labels],
            "counts": [list(row) for row in self.counts],
            "agreement": self.agreement,
        }


def evaluate_cit(
    records: Sequence[CitRecord],
    policy: str,
    positive_class: CiLabel = CiLabel.INDEPENDENT,
) -> MetricsReport:
    """Confusion counts of one policy against the labels.

    Records without a label are skipped. UNDECIDED decisions are counted
    apart, and against recall when the label is the positive class.
    """
    counts = {"tp": 0, "fp": 0, "tn": 0, "fn": 0, "undecided": 0, "undecided_positive": 0}
    for record in records:
        decision = record.decision(policy)
        if record.label is None:
            continue
        predicted = decision.outcome.as_label()
        if predicted is None:
            counts["undecided"] += 1
            if record.label is positive_class:
                counts["undecided_positive"] += 1
        elif predicted is positive_class:
            counts["tp" if record.label is positive_class else "fp"] += 1
        else:
            counts["fn" if record.label is positive_class else "tn"] += 1
    return MetricsReport(positive_class=positive_class, **counts)


def consistency_matrix(records: Sequence[CitRecord], policy: str) -> ConsistencyMatrix:
    index = {label: i for i, label in enumerate(CONSISTENCY_LABELS)}
    counts = np.zeros((3, 3), dtype=int)
    for record in records:
        if not record.direction_decisions:
            raise MissingDirection(f"Record {record.query} has no per-direction decisions")
        if policy not in record.direction_decisions:
            raise UnknownPolicy(f"Record {record.query} has no decision for '{policy}'")
        forward, backward = record.direction_decisions[policy]
        counts[index[_AS_VERDICT[forward.outcome]], index[_AS_VERDICT[backward.outcome]]] += 1
    return ConsistencyMatrix(tuple(tuple(int(v) for v in row) for row in counts))


def compare_graphs(predicted: GraphLike, truth: Dag) -> Dict[str, object]:
    return {
        "shd": shd(predicted, truth),
        "skeleton": skeleton_metrics(predicted, truth).to_dict(),
    }


@dataclass(frozen=True)
class BenchOptions:
    max_cond_size: Optional[int] = None
    both_orders: bool = True
    positive_class: CiLabel = CiLabel.INDEPENDENT

    def to_dict(self) -> Dict[str, object]:
        return {
            "max_cond_size": self.max_cond_size,
            "both_orders": self.both_orders,
            "positive_class": self.positive_class.value,
        }


@dataclass
class BenchReport:
    problem_id: str
    oracle: str
    policies: List[str]
    options: BenchOptions
    records: List[CitRecord]
    metrics: Dict[str, MetricsReport] = field(default_factory=dict)
    consistency: Dict[str, ConsistencyMatrix] = field(default_factory=dict)
    meta: Dict[str, object] = field(default_factory=dict)

    def to_payload(self) -> Dict[str, object]:
        """Everything but run metadata; identical inputs give identical payloads"""
        return {
            "format": REPORT_FORMAT,
            "template_version": TEMPLATE_VERSION,
            "problem": self.problem_id,
            "oracle": self.oracle,
            "policies": list(self.policies),
            "options": self.options.to_dict(),
            "records": [record.to_dict() for record in self.records],
            "metrics": {k: m.to_dict() for k, m in self.metrics.items()},
            "consistency": {k: c.to_dict() for k, c in self.consistency.items()},
        }


def _safe_decide(policy: DecisionPolicy, answers) -> Decision:
    try:
        return decide(policy, answers)
    except NoDecisiveAnswers:
        logger.warning(f"No YES/NO answers for policy {policy.name}; recorded as undecided")
        return Decision(
            Outcome.UNDECIDED,
            STATISTICAL,
            p_value=1.0,
            alpha=policy.alpha,
            tally=tally_answers(answers),
        )


def _record_from_answers(
    q: CiQuery,
    label: Optional[CiLabel],
    policies: Sequence[DecisionPolicy],
    forward,
    backward,
) -> CitRecord:
    decisions: Dict[str, Decision] = {}
    per_direction: Dict[str, Tuple[Decision, Decision]] = {}
    for policy in policies:
        if backward is None:
            decisions[policy.name] = _safe_decide(policy, forward)
            continue
        decisions[policy.name] = _safe_decide(policy, tuple(forward) + tuple(backward))
        per_direction[policy.name] = (
            _safe_decide(policy, forward),
            _safe_decide(policy, backward),
        )
    t_fwd = tally_answers(forward)
    if backward is None:
        return CitRecord(q, label, decisions, None, t_fwd)
    t_bwd = tally_answers(backward)
    return CitRecord(
        q, label, decisions, per_direction, symmetrize(t_fwd, t_bwd), (t_fwd, t_bwd)
    )


def _record_from_verdicts(
    q: CiQuery,
    label: Optional[CiLabel],
    policies: Sequence[DecisionPolicy],
    verdict: OracleVerdict,
    swapped: Optional[OracleVerdict],
) -> CitRecord:
    decisions = {policy.name: verdict.decision for policy in policies}
    per_direction = None
    if swapped is not None:
        per_direction = {
            policy.name: (verdict.decision, swapped.decision) for policy in policies
        }
    return CitRecord(q, label, decisions, per_direction)


def run_benchmark(
    problem: Problem,
    oracle: CiOracle,
    policies: Sequence[DecisionPolicy],
    opts: BenchOptions = BenchOptions(),
) -> BenchReport:
    """Query every benchmark statement once per direction and score each policy.

    Answer-backed verdicts are re-aggregated under every policy; other
    oracles carry their own decision for every policy.
    """
    if not policies:
        raise UnknownPolicy("At least one decision policy is required")
    statements = benchmark_statements(problem, opts.max_cond_size, both_orders=False)
    records: List[CitRecord] = []
    for q in statements:
        label = ground_truth_label(problem, q) if problem.ground_truth else None
        verdict = oracle_query(oracle, problem, q)
        if verdict.answers is not None and len(verdict.answers) == 2:
            forward, backward = verdict.answers
        elif verdict.answers is not None:
            forward = verdict.answers[0]
            backward = None
            if opts.both_orders:
                backward = oracle_query(oracle, problem, q.swapped()).answers[0]
        else:
            swapped = oracle_query(oracle, problem, q.swapped()) if opts.both_orders else None
            records.append(_record_from_verdicts(q, label, policies, verdict, swapped))
            continue
        records.append(_record_from_answers(q, label, policies, forward, backward))

    report = BenchReport(
        problem_id=problem.id,
        oracle=oracle.source,
        policies=[policy.name for policy in policies],
        options=opts,
        records=records,
    )
    if problem.ground_truth is not None:
        for policy in policies:
            report.metrics[policy.name] = evaluate_cit(
                records, policy.name, opts.positive_class
            )
    if records and all(record.direction_decisions for record in records):
        for policy in policies:
            report.consistency[policy.name] = consistency_matrix(records, policy.name)
    logger.info(f"Benchmarked {len(records)} statement(s) of {problem.id}")
    return report


@dataclass(frozen=True)
class SpuriousRow:
    x: str
    y: str
    tally: VoteTally
    voting: Outcome
    indep: Decision
    dep: Decision

    def to_dict(self) -> Dict[str, object]:
        return {
            "x": self.x,
            "y": self.y,
            "no_yes": self.tally.no_yes(),
            "voting": _AS_VERDICT[self.voting].value,
            "h0_indep": _AS_VERDICT[self.indep.outcome].value,
            "h0_indep_p": self.indep.p_value,
            "h0_dep": _AS_VERDICT[self.dep.outcome].value,
            "h0_dep_p": self.dep.p_value,
        }


def spurious_table(
    records: Sequence[CitRecord], alpha: float = 0.05, test: str = EXACT
) -> List[SpuriousRow]:
    """Voting and both one-sided tests per pair, from the recorded tallies"""
    rows = []
    for record in records:
        if record.tally is None:
            raise MissingDirection(f"Record {record.query} carries no vote tally")
        t = record.tally
        rows.append(
            SpuriousRow(
                x=record.query.x,
                y=record.query.y,
                tally=t,
                voting=decide_majority(t).outcome,
                indep=decide_statistical(t, NullHypothesis.NULL_INDEPENDENT, alpha, test),
                dep=decide_statistical(t, NullHypothesis.NULL_DEPENDENT, alpha, test),
            )
        )
    return rows


def as_verdict(outcome: Outcome) -> Verdict:
    return _AS_VERDICT[outcome]
