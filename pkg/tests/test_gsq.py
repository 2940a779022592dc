import numpy as np
import pytest

from chatpc.app.gsq import SampleTable, g_squared, gsq_p_value
from chatpc.app.labels import Outcome
from chatpc.app.oracle import GsqOracle, gsq_ci_test
from chatpc.app.problems import CiQuery
from chatpc.utils.errors import ColumnMissing, InsufficientData


def chain_sample(rows=2000, seed=0):
    """a -> b -> c with binary variables and 10% copy noise"""
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 2, rows)
    b = np.where(rng.random(rows) < 0.9, a, 1 - a)
    c = np.where(rng.random(rows) < 0.9, b, 1 - b)
    return SampleTable.from_columns({"a": a, "b": b, "c": c})


def fork_counts():
    """x <- z -> y with cell counts that factorize exactly within each z"""
    cells = {
        ("0", "0", "0"): 81, ("0", "1", "0"): 9, ("1", "0", "0"): 9, ("1", "1", "0"): 1,
        ("1", "1", "1"): 81, ("1", "0", "1"): 9, ("0", "1", "1"): 9, ("0", "0", "1"): 1,
    }
    columns = {"x": [], "y": [], "z": []}
    for (x, y, z), count in cells.items():
        columns["x"] += [x] * count
        columns["y"] += [y] * count
        columns["z"] += [z] * count
    return SampleTable.from_columns(columns)


def test_independent_columns_have_zero_statistic():
    table = SampleTable.from_columns({"x": [0, 0, 1, 1] * 5, "y": [0, 1, 0, 1] * 5})
    statistic, dof = g_squared(table, CiQuery("x", "y"))
    assert statistic == pytest.approx(0.0)
    assert dof == 1
    assert gsq_p_value(table, CiQuery("x", "y")) == pytest.approx(1.0)


def test_identical_columns_are_dependent():
    table = SampleTable.from_columns({"x": [0, 1] * 50, "y": [0, 1] * 50})
    statistic, dof = g_squared(table, CiQuery("x", "y"))
    assert statistic == pytest.approx(2 * 100 * np.log(2))
    assert gsq_p_value(table, CiQuery("x", "y")) < 1e-10


def test_chain_ends_are_dependent():
    assert gsq_ci_test(chain_sample(), CiQuery("a", "c")).outcome is Outcome.DEPENDENT


def test_common_cause_separates():
    table = fork_counts()
    statistic, dof = g_squared(table, CiQuery("x", "y", ("z",)))
    assert statistic == pytest.approx(0.0, abs=1e-9)
    assert dof == 2
    assert gsq_ci_test(table, CiQuery("x", "y", ("z",))).outcome is Outcome.INDEPENDENT
    assert gsq_ci_test(table, CiQuery("x", "y")).outcome is Outcome.DEPENDENT


def test_dof_counts_non_empty_strata_only():
    table = SampleTable.from_columns(
        {"x": [0, 1, 0, 1] * 5, "y": [0, 0, 1, 1] * 5, "z": ["k"] * 20}
    )
    _, dof = g_squared(table, CiQuery("x", "y", ("z",)))
    assert dof == 1


def test_missing_column():
    with pytest.raises(ColumnMissing):
        gsq_p_value(chain_sample(100), CiQuery("a", "q"))


def test_too_few_rows():
    table = SampleTable.from_columns({"x": [0, 1], "y": [1, 0]})
    with pytest.raises(InsufficientData):
        gsq_p_value(table, CiQuery("x", "y"))


def test_csv_values_stay_categorical(tmp_path):
    path = tmp_path / "sample.csv"
    path.write_text("x;y\n" + "NA;1\n01;2\n" * 10, encoding="utf-8")
    table = SampleTable.from_csv(str(path), delimiter=";")
    assert set(table.frame["x"]) == {"NA", "01"}
    assert len(table) == 20


def test_gsq_oracle_carries_p_value(burglary):
    table = chain_sample(500)
    verdict = GsqOracle(table, alpha=0.01).query(burglary, CiQuery("a", "b"))
    assert verdict.source == "gsq"
    assert verdict.decision.p_value is not None
    assert verdict.decision.alpha == 0.01
