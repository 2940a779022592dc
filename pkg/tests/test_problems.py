import json
from dataclasses import replace

import pytest

from chatpc.app.labels import CiLabel
from chatpc.app.problems import (BUNDLED_PROBLEMS, CiQuery, benchmark_statements,
                                 dump_problem, enumerate_ci_statements,
                                 ground_truth_label, load_bundled_problem,
                                 load_problem, problem_from_dict,
                                 resolve_problem)
from chatpc.utils.errors import (CycleDetected, InvalidQuery, NoGroundTruth,
                                 SchemaError, UnknownVariable)


def minimal(**extra):
    payload = {
        "id": "toy",
        "field": "testing",
        "context": "Two coins.",
        "variables": [
            {"name": "a", "description": "first coin"},
            {"name": "b", "description": "second coin"},
        ],
    }
    payload.update(extra)
    return payload


@pytest.mark.parametrize("name", BUNDLED_PROBLEMS)
def test_every_bundled_problem_loads(name):
    problem = load_bundled_problem(name)
    assert problem.id == name
    assert len(problem.variables) >= 2


def test_burglary_shape(burglary):
    assert burglary.variable_names == ("B", "E", "A", "J", "M")
    assert len(burglary.ground_truth.edges) == 4


def test_external_ground_truths_are_flagged():
    assert load_bundled_problem("sachs").provenance == "external"
    assert load_bundled_problem("bk-spv").provenance == "external"
    assert len(load_bundled_problem("sachs").ground_truth.edges) == 17


def test_spurious_has_pairs_and_no_graph(spurious):
    assert spurious.ground_truth is None
    assert len(spurious.pairs) == 15
    assert len(spurious.variables) == 30


def test_schema_errors_name_the_field():
    with pytest.raises(SchemaError) as info:
        problem_from_dict({"id": "x", "field": "f", "variables": []})
    assert info.value.field == "context"

    payload = minimal()
    payload["variables"][1]["name"] = "a"
    with pytest.raises(SchemaError) as info:
        problem_from_dict(payload)
    assert "variables" in info.value.field


def test_ground_truth_must_be_acyclic():
    with pytest.raises(CycleDetected):
        problem_from_dict(minimal(ground_truth={"edges": [["a", "b"], ["b", "a"]]}))


def test_load_problem_rejects_non_json():
    with pytest.raises(SchemaError):
        load_problem(b"\xff\xfe not json")


def test_unknown_bundled_problem():
    with pytest.raises(SchemaError):
        load_bundled_problem("no-such-problem")


def test_resolve_problem_reads_files(tmp_path, burglary):
    path = tmp_path / "copy.json"
    path.write_text(dump_problem(burglary), encoding="utf-8")
    again = resolve_problem(str(path))
    assert again.variable_names == burglary.variable_names
    assert again.ground_truth.edges == burglary.ground_truth.edges


def test_ci_query_validation():
    with pytest.raises(InvalidQuery):
        CiQuery("a", "a")
    with pytest.raises(InvalidQuery):
        CiQuery("a", "b", ("a",))
    assert CiQuery("b", "a", ("d", "c")).unordered_key() == ("a", "b", ("c", "d"))


def test_enumeration_counts(burglary):
    # n(n-1) * sum over k of C(n-2, k)
    assert len(enumerate_ci_statements(burglary)) == 5 * 4 * 8
    assert len(enumerate_ci_statements(burglary, 0)) == 20
    assert len(enumerate_ci_statements(burglary, 1, both_orders=False)) == 10 * 4


def test_enumeration_order(burglary):
    statements = enumerate_ci_statements(burglary, 1)
    assert statements[0] == CiQuery("A", "B")
    assert statements[1] == CiQuery("A", "B", ("E",))


def test_enumeration_ignores_declaration_order(burglary):
    reordered = replace(burglary, variables=tuple(reversed(burglary.variables)))
    assert enumerate_ci_statements(reordered, 1) == enumerate_ci_statements(burglary, 1)


def test_enumeration_cap_is_clamped(burglary):
    assert enumerate_ci_statements(burglary, 99) == enumerate_ci_statements(burglary)


def test_sachs_statement_count():
    sachs = load_bundled_problem("sachs")
    assert len(enumerate_ci_statements(sachs, 1)) == 1100
    assert len(benchmark_statements(sachs, both_orders=True)) == 1100


def test_spurious_benchmark_is_marginal(spurious):
    statements = benchmark_statements(spurious)
    assert len(statements) == 15
    assert all(not q.z for q in statements)


def test_ground_truth_labels(burglary, cancer):
    assert ground_truth_label(burglary, CiQuery("B", "E")) is CiLabel.INDEPENDENT
    assert ground_truth_label(burglary, CiQuery("B", "E", ("A",))) is CiLabel.DEPENDENT
    assert ground_truth_label(cancer, CiQuery("X", "D", ("C",))) is CiLabel.INDEPENDENT


def test_ground_truth_label_errors(burglary, spurious):
    with pytest.raises(NoGroundTruth):
        ground_truth_label(spurious, CiQuery("pool", "cage"))
    with pytest.raises(UnknownVariable):
        ground_truth_label(burglary, CiQuery("B", "Q"))


def test_dump_problem_is_json(cancer):
    payload = json.loads(dump_problem(cancer))
    assert payload["ground_truth"]["edges"] == [["C", "D"], ["C", "X"], ["P", "C"], ["S", "C"]]


@pytest.mark.parametrize("name", BUNDLED_PROBLEMS)
def test_dump_problem_round_trips(name):
    problem = load_bundled_problem(name)
    assert load_problem(dump_problem(problem).encode("utf-8")) == problem


def test_pairs_must_name_two_variables():
    with pytest.raises(SchemaError) as info:
        problem_from_dict(minimal(pairs=[["a", "b"], ["a", "a"]]))
    assert info.value.field == "pairs[1]"
