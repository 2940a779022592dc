#!/usr/bin/env python
"""Write graphs, traces and benchmark reports under the output directory"""

import io
import json
import os
from typing import Dict, List, Optional, Sequence

from rich.console import Console
from rich.table import Table

from chatpc.__version__ import __version__
from chatpc.utils.errors import StoreIoError
from chatpc.utils.logger import config

from .cassette import utc_now
from .evaluation import (BenchReport, ConsistencyMatrix, SpuriousRow,
                         as_verdict)
from .graph import GraphLike, graph_to_dict, to_dot
from .pc import PcTrace


def output_directory(directory: Optional[str] = None) -> str:
    if directory is None:
        directory = config("CHATPC_OUT", default="chatpc-out")
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as error:
        raise StoreIoError(f"Cannot create output directory {directory}: {error}")
    return directory


def save_text(content: str, filename: str, directory: Optional[str] = None) -> str:
    """Save content under the output directory and return its path"""
    filepath = os.path.join(output_directory(directory), filename)
    try:
        with open(filepath, "w", encoding="utf-8") as f:
            f.write(content)
    except OSError as error:
        raise StoreIoError(f"Cannot write {filepath}: {error}")
    return filepath


def dump_json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def run_meta() -> Dict[str, str]:
    return {"created_at": utc_now(), "chatpc_version": __version__}


def save_report(
    payload: Dict,
    problem_id: str,
    command: str,
    directory: Optional[str] = None,
    meta: Optional[Dict] = None,
) -> str:
    """<problem>.<command>.json with the payload kept apart from run metadata"""
    document = {"payload": payload, "meta": meta if meta is not None else run_meta()}
    return save_text(dump_json(document), f"{problem_id}.{command}.json", directory)


def save_graph(
    graph: GraphLike,
    problem_id: str,
    directory: Optional[str] = None,
    trace: Optional[PcTrace] = None,
    comparison: Optional[Dict] = None,
) -> List[str]:
    paths = [
        save_text(to_dot(graph, problem_id), f"{problem_id}.dot", directory),
        save_text(dump_json(graph_to_dict(graph)), f"{problem_id}.graph.json", directory),
    ]
    if trace is not None:
        document = {"trace": trace.to_dict()}
        if comparison is not None:
            document["comparison"] = comparison
        paths.append(save_text(dump_json(document), f"{problem_id}.trace.json", directory))
    return paths


def render_table(title: str, columns: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    """Aligned plain-text table"""
    table = Table(title=title, show_lines=False)
    for column in columns:
        table.add_column(column)
    for row in rows:
        table.add_row(*[str(cell) for cell in row])
    buffer = io.StringIO()
    Console(file=buffer, width=160, color_system=None, force_terminal=False).print(table)
    return buffer.getvalue()


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.3f}"


def _fmt_p(value: Optional[float]) -> str:
    if value is None:
        return "-"
    return f"{value:.3g}"


def metrics_rows(report: BenchReport) -> List[List[str]]:
    rows = []
    for policy in report.policies:
        metrics = report.metrics.get(policy)
        if metrics is None:
            continue
        rows.append(
            [
                report.problem_id,
                policy,
                _fmt(metrics.accuracy),
                _fmt(metrics.f1),
                _fmt(metrics.precision),
                _fmt(metrics.recall),
                str(metrics.undecided),
            ]
        )
    return rows


def metrics_text(report: BenchReport) -> str:
    return render_table(
        f"CI statements: {report.problem_id} ({report.oracle} oracle)",
        ["problem", "policy", "accuracy", "f1", "precision", "recall", "undecided"],
        metrics_rows(report),
    )


def consistency_text(matrix: ConsistencyMatrix, title: str) -> str:
    labels = [label.value for label in matrix.labels]
    rows = [[labels[i], *[str(v) for v in row]] for i, row in enumerate(matrix.counts)]
    agreement = matrix.agreement
    caption = f"{title} (agreement {_fmt(agreement)})"
    return render_table(caption, ["(x, y) \\ (y, x)", *labels], rows)


def spurious_text(rows: Sequence[SpuriousRow]) -> str:
    return render_table(
        "Spurious pairs",
        ["x", "y", "NO-YES", "voting", "H0: indep", "p", "H0: dep", "p"],
        [
            [
                row.x,
                row.y,
                row.tally.no_yes(),
                as_verdict(row.voting).value,
                as_verdict(row.indep.outcome).value,
                _fmt_p(row.indep.p_value),
                as_verdict(row.dep.outcome).value,
                _fmt_p(row.dep.p_value),
            ]
            for row in rows
        ],
    )
