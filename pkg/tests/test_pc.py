from dataclasses import replace

import numpy as np
import pytest

from chatpc.app.graph import Pdag, cpdag_of, pair
from chatpc.app.oracle import CachedOracle, DsepOracle, NoiseSpec, NoisyOracle
from chatpc.app.pc import (BACKGROUND, COLLIDER_ORIENTED, EDGE_REMOVED,
                           MEEK_APPLIED, ORIENTATION_CONFLICT, PcOptions, PcTrace,
                           orient_v_structures, pc_skeleton, run_pc)
from chatpc.app.problems import load_bundled_problem
from chatpc.utils.errors import OrientationConflict, QueryBudgetExceeded


def test_burglary_skeleton_and_sepsets(burglary):
    skeleton, sepsets, trace = pc_skeleton(burglary, DsepOracle())
    assert skeleton.skeleton_pairs() == {
        pair("B", "A"), pair("E", "A"), pair("A", "J"), pair("A", "M")
    }
    assert sepsets[pair("B", "E")] == ()
    assert sepsets[pair("J", "M")] == ("A",)
    assert trace.total_queries == sum(level["queries"] for level in trace.level_bounds)


def test_level_queries_stay_under_ceiling(burglary):
    _, _, trace = pc_skeleton(burglary, DsepOracle())
    for level in trace.level_bounds:
        assert level["queries"] <= level["ceiling"]


def test_burglary_fully_directed(burglary):
    pdag, trace = run_pc(burglary, DsepOracle())
    assert pdag.directed == burglary.ground_truth.edges
    assert not pdag.undirected
    assert trace.of_action(COLLIDER_ORIENTED)
    assert {entry.edge for entry in trace.of_action(MEEK_APPLIED)} == {("A", "J"), ("A", "M")}


def test_cancer_matches_its_graph(cancer):
    pdag, _ = run_pc(cancer, DsepOracle())
    assert pdag.directed == cancer.ground_truth.edges


def test_no_orient_stops_at_skeleton(cancer):
    pdag, _ = run_pc(cancer, DsepOracle(), PcOptions(orient=False))
    assert not pdag.directed
    assert len(pdag.undirected) == 4


def test_max_cond_size_zero_keeps_conditional_edges(burglary):
    skeleton, _, trace = pc_skeleton(burglary, DsepOracle(), PcOptions(max_cond_size=0))
    # J - M and B - J etc. need a conditioning set to be removed
    assert pair("J", "M") in skeleton.skeleton_pairs()
    assert len(trace.level_bounds) == 1


def test_trace_records_removals(burglary):
    _, trace = run_pc(burglary, DsepOracle())
    removed = {tuple(sorted(entry.edge)) for entry in trace.of_action(EDGE_REMOVED)}
    assert ("B", "E") in removed
    assert len(removed) == 10 - 4


def test_parallel_run_matches_serial():
    asia = load_bundled_problem("asia")
    oracle = NoisyOracle(NoiseSpec(0.1, 0.1, seed=5))
    serial, serial_trace = run_pc(asia, oracle)
    parallel, parallel_trace = run_pc(asia, oracle, PcOptions(jobs=4))
    assert parallel == serial
    assert parallel_trace.to_dict() == serial_trace.to_dict()


def test_budget_exhaustion_keeps_partial_skeleton(burglary):
    with pytest.raises(QueryBudgetExceeded) as info:
        run_pc(burglary, DsepOracle(), PcOptions(query_budget=3))
    error = info.value
    assert error.trace.total_queries == 3
    assert pair("B", "E") not in error.skeleton.skeleton_pairs()
    assert isinstance(error.skeleton, Pdag)


def test_cached_oracle_does_not_change_the_result(burglary):
    cached = CachedOracle(DsepOracle())
    pdag, _ = run_pc(burglary, cached)
    assert pdag == run_pc(burglary, DsepOracle())[0]


def test_collider_conflict_leaves_edge_undirected():
    # a - b - c - d with a, c and b, d separated by the empty set
    skeleton = Pdag.undirected_from_pairs(
        ("a", "b", "c", "d"), [pair("a", "b"), pair("b", "c"), pair("c", "d")]
    )
    sepsets = {pair("a", "c"): (), pair("b", "d"): (), pair("a", "d"): ()}
    pdag = orient_v_structures(skeleton, sepsets)
    assert pair("b", "c") in pdag.undirected
    assert ("a", "b") in pdag.directed
    assert ("d", "c") in pdag.directed
    with pytest.raises(OrientationConflict):
        orient_v_structures(skeleton, sepsets, conflict_policy="raise")


def test_conflicts_are_traced():
    skeleton = Pdag.undirected_from_pairs(
        ("a", "b", "c", "d"), [pair("a", "b"), pair("b", "c"), pair("c", "d")]
    )
    sepsets = {pair("a", "c"): (), pair("b", "d"): (), pair("a", "d"): ()}
    trace = PcTrace()
    orient_v_structures(skeleton, sepsets, trace)
    assert [entry.edge for entry in trace.of_action(ORIENTATION_CONFLICT)] == [("b", "c")]


def test_background_orients_remaining_edges():
    fork = load_bundled_problem("nao-dk-med")
    pdag, trace = run_pc(fork, DsepOracle(), PcOptions(background=(("NAO", "DK"),)))
    assert ("NAO", "DK") in pdag.directed
    assert trace.of_action(BACKGROUND)
    assert cpdag_of(fork.ground_truth).undirected == {pair("NAO", "DK"), pair("NAO", "MED")}


def test_options_are_validated():
    with pytest.raises(ValueError):
        PcOptions(jobs=0)
    with pytest.raises(ValueError):
        PcOptions(undecided_as="maybe")


def test_stable_skeleton_ignores_variable_order():
    asia = load_bundled_problem("asia")
    oracle = NoisyOracle(NoiseSpec(0.15, 0.15, seed=21))
    expected, _, _ = pc_skeleton(asia, oracle)
    rng = np.random.default_rng(8)
    for _ in range(10):
        order = rng.permutation(len(asia.variables))
        shuffled = replace(asia, variables=tuple(asia.variables[i] for i in order))
        skeleton, _, _ = pc_skeleton(shuffled, oracle)
        assert skeleton.skeleton_pairs() == expected.skeleton_pairs()
