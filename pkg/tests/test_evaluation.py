import pytest

from chatpc.app.aggregate import (Decision, DecisionPolicy, VoteTally,
                                  parse_policy)
from chatpc.app.ai_providers import REPLAY_ONLY
from chatpc.app.cassette import (CassetteStore, load_vote_fixture,
                                 synthesize_cassette)
from chatpc.app.evaluation import (BenchOptions, CitRecord, compare_graphs,
                                   consistency_matrix, evaluate_cit,
                                   run_benchmark, spurious_table)
from chatpc.app.graph import Pdag, pair
from chatpc.app.labels import CiLabel, Outcome
from chatpc.app.oracle import DsepOracle, LlmOracle, NoiseSpec, NoisyOracle
from chatpc.app.problems import CiQuery
from chatpc.utils.errors import MissingDirection, UnknownPolicy

POLICIES = [parse_policy(name) for name in ("majority", "stat_indep_exact", "stat_dep_exact")]


def record(label, outcome, policy="majority", directions=None):
    decision = Decision(outcome, "majority")
    per_direction = None
    if directions is not None:
        per_direction = {policy: tuple(Decision(o, "majority") for o in directions)}
    return CitRecord(CiQuery("a", "b"), label, {policy: decision}, per_direction)


def test_evaluate_cit_metrics():
    records = [
        record(CiLabel.INDEPENDENT, Outcome.INDEPENDENT),
        record(CiLabel.INDEPENDENT, Outcome.DEPENDENT),
        record(CiLabel.DEPENDENT, Outcome.DEPENDENT),
        record(CiLabel.DEPENDENT, Outcome.INDEPENDENT),
        record(CiLabel.INDEPENDENT, Outcome.UNDECIDED),
    ]
    metrics = evaluate_cit(records, "majority")
    assert (metrics.tp, metrics.fn, metrics.tn, metrics.fp) == (1, 1, 1, 1)
    assert metrics.undecided == 1
    assert metrics.accuracy == 0.5
    assert metrics.recall == pytest.approx(1 / 3)


def test_no_independent_predictions_leave_precision_empty():
    records = [record(CiLabel.DEPENDENT, Outcome.DEPENDENT), record(CiLabel.INDEPENDENT, Outcome.DEPENDENT)]
    metrics = evaluate_cit(records, "majority")
    assert metrics.precision is None
    assert metrics.recall == 0.0
    assert metrics.f1 is None


def test_unknown_policy_is_an_error():
    with pytest.raises(UnknownPolicy):
        evaluate_cit([record(CiLabel.DEPENDENT, Outcome.DEPENDENT)], "weighted")


def test_consistency_matrix_counts_pairs():
    records = [
        record(None, Outcome.DEPENDENT, directions=(Outcome.DEPENDENT, Outcome.DEPENDENT)),
        record(None, Outcome.DEPENDENT, directions=(Outcome.INDEPENDENT, Outcome.DEPENDENT)),
        record(None, Outcome.UNDECIDED, directions=(Outcome.UNDECIDED, Outcome.UNDECIDED)),
    ]
    matrix = consistency_matrix(records, "majority")
    # rows and columns are YES, NO, UNCERTAIN
    assert matrix.counts == ((0, 1, 0), (0, 1, 0), (0, 0, 1))
    assert matrix.agreement == pytest.approx(2 / 3)


def test_consistency_needs_both_directions():
    with pytest.raises(MissingDirection):
        consistency_matrix([record(None, Outcome.DEPENDENT)], "majority")


def test_compare_graphs(burglary):
    skeleton = Pdag.undirected_from_pairs(
        burglary.variable_names,
        [pair("B", "A"), pair("E", "A"), pair("A", "J"), pair("A", "M")],
    )
    comparison = compare_graphs(skeleton, burglary.ground_truth)
    assert comparison["shd"] == 4
    assert comparison["skeleton"]["precision"] == 1.0


def test_dsep_benchmark_is_perfect(burglary):
    report = run_benchmark(burglary, DsepOracle(), [DecisionPolicy()])
    assert report.metrics["majority"].accuracy == 1.0
    assert len(report.records) == 5 * 4 * 8 // 2
    assert report.consistency["majority"].agreement == 1.0


def test_noisy_benchmark_is_reproducible(burglary):
    oracle = NoisyOracle(NoiseSpec(0.1, 0.1, seed=11))
    first = run_benchmark(burglary, oracle, [DecisionPolicy()])
    second = run_benchmark(burglary, NoisyOracle(NoiseSpec(0.1, 0.1, seed=11)), [DecisionPolicy()])
    assert first.to_payload() == second.to_payload()


def spurious_report(spurious, llm_config, both_orders=True):
    store = CassetteStore(None)
    synthesize_cassette(spurious, load_vote_fixture("spurious"), store)
    oracle = LlmOracle(llm_config, DecisionPolicy(), cassette=store, mode=REPLAY_ONLY)
    return run_benchmark(spurious, oracle, POLICIES, BenchOptions(both_orders=both_orders))


def test_spurious_records_reaggregate_every_policy(spurious, llm_config):
    report = spurious_report(spurious, llm_config)
    assert len(report.records) == 15
    assert report.metrics == {}
    first = report.records[0]
    assert first.tally == VoteTally.of(16, 4)
    assert set(first.decisions) == {"majority", "stat_indep_exact", "stat_dep_exact"}
    assert first.decision("stat_dep_exact").p_value == pytest.approx(0.005908966064453125)


def test_spurious_table_decisions(spurious, llm_config):
    rows = spurious_table(spurious_report(spurious, llm_config).records)
    by_pair = {(row.x, row.y): row for row in rows}
    assert [row.x for row in rows][:3] == ["spending", "pool", "cheese"]

    def columns(x, y):
        row = by_pair[(x, y)]
        return row.voting, row.indep.outcome, row.dep.outcome

    I, D = Outcome.INDEPENDENT, Outcome.DEPENDENT
    assert columns("revenue", "CS") == (I, I, D)
    assert columns("chicken", "oil") == (D, D, D)
    assert columns("cars", "crashing") == (D, I, D)
    assert columns("pool", "cage") == (I, I, I)
    assert by_pair[("mozzarella", "engineering")].tally.no_yes() == "0-19"


def test_spurious_table_needs_tallies():
    bare = CitRecord(CiQuery("a", "b"), None, {"majority": Decision(Outcome.DEPENDENT, "majority")})
    with pytest.raises(MissingDirection):
        spurious_table([bare])


def test_payload_has_no_run_metadata(burglary):
    payload = run_benchmark(burglary, DsepOracle(), [DecisionPolicy()]).to_payload()
    assert "created_at" not in str(payload)
    assert payload["format"] == "chatpc-report/1"
