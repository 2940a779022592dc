#!/usr/bin/env python3
"""G² conditional independence test on discrete sample tables"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import chi2

from chatpc.utils.errors import ColumnMissing, InsufficientData
from chatpc.utils.logger import Logger

from .problems import CiQuery

logger_instance = Logger("__gsq__")
logger = logger_instance.get_logger()


@dataclass(frozen=True, eq=False)
class SampleTable:
    """Rows of category labels; every value is kept as a string"""

    frame: pd.DataFrame

    @classmethod
    def from_csv(cls, path: str, delimiter: str = ",") -> "SampleTable":
        frame = pd.read_csv(path, sep=delimiter, dtype=str, keep_default_na=False)
        return cls(frame)

    @classmethod
    def from_columns(cls, columns: dict) -> "SampleTable":
        return cls(pd.DataFrame({name: [str(v) for v in values] for name, values in columns.items()}))

    @property
    def columns(self) -> Tuple[str, ...]:
        return tuple(self.frame.columns)

    def __len__(self) -> int:
        return len(self.frame)

    def require(self, names: Sequence[str]) -> None:
        missing = [name for name in names if name not in self.frame.columns]
        if missing:
            raise ColumnMissing(f"Sample table has no column(s) {missing}")


def _stratum_statistic(x: pd.Series, y: pd.Series) -> float:
    observed = pd.crosstab(x, y).to_numpy(dtype=float)
    expected = np.outer(observed.sum(axis=1), observed.sum(axis=0)) / observed.sum()
    mask = observed > 0
    return float(2.0 * np.sum(observed[mask] * np.log(observed[mask] / expected[mask])))


def g_squared(data: SampleTable, q: CiQuery) -> Tuple[float, int]:
    """(G², degrees of freedom) for x _||_ y | z.

    Each non-empty stratum of z contributes (|X|-1)(|Y|-1) degrees of
    freedom; strata absent from the sample contribute nothing.
    """
    data.require(q.variables())
    frame = data.frame
    levels_x = frame[q.x].nunique()
    levels_y = frame[q.y].nunique()
    per_stratum = (levels_x - 1) * (levels_y - 1)

    if q.z:
        groups = [group for _, group in frame.groupby(list(q.z), sort=True)]
    else:
        groups = [frame]

    statistic = 0.0
    for group in groups:
        statistic += _stratum_statistic(group[q.x], group[q.y])
    return max(statistic, 0.0), per_stratum * len(groups)


def gsq_p_value(data: SampleTable, q: CiQuery, min_rows: int = 10) -> float:
    """Chi-square upper tail of G²"""
    data.require(q.variables())
    if len(data) < min_rows:
        raise InsufficientData(
            f"G² test needs at least {min_rows} rows, the table has {len(data)}"
        )
    statistic, dof = g_squared(data, q)
    p = 1.0 if dof <= 0 else float(chi2.sf(statistic, dof))
    logger.debug(f"{q}: G2={statistic:.4f} dof={dof} p={p:.4g}")
    return min(1.0, max(0.0, p))
