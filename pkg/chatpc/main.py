#!/usr/bin/env python3
"""chatpc command line: CI queries, PC discovery and oracle benchmarks"""

from typing import List, Optional, Sequence

from rich.console import Console

from chatpc.__version__ import __version__
from chatpc.app.aggregate import (EXACT, STATISTICAL, DecisionPolicy,
                                  NullHypothesis, parse_policy)
from chatpc.app.ai_providers import RECORD, REPLAY_ONLY, LlmConfig
from chatpc.app.cassette import (CassetteStore, load_vote_fixture,
                                 synthesize_cassette)
from chatpc.app.evaluation import (BenchOptions, BenchReport, compare_graphs,
                                   run_benchmark, spurious_table)
from chatpc.app.graph import Pdag
from chatpc.app.gsq import SampleTable
from chatpc.app.oracle import (CachedOracle, CiOracle, DsepOracle, GsqOracle,
                               LlmOracle, NoiseSpec, NoisyOracle,
                               OracleVerdict, combined_tally, oracle_query)
from chatpc.app.pc import PcOptions, run_pc
from chatpc.app.problems import CiQuery, Problem, resolve_problem
from chatpc.app.report import (consistency_text, metrics_text, run_meta,
                               save_graph, save_report, save_text,
                               spurious_text)
from chatpc.utils.errors import (AggregationError, CassetteMiss, EvalError,
                                 GraphError, KnownError, LlmError,
                                 OracleError, ProblemError,
                                 QueryBudgetExceeded, StoreIoError)
from chatpc.utils.hashing import derive_seed
from chatpc.utils.logger import Logger, config, set_log_level
from chatpc.utils.parser import RunFlags, parse_arguments

logger_instance = Logger("__chatpc__")
logger = logger_instance.get_logger()

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_TRANSPORT = 3
EXIT_BUDGET = 4


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, QueryBudgetExceeded):
        return EXIT_BUDGET
    if isinstance(error, CassetteMiss):
        return EXIT_USAGE
    if isinstance(error, StoreIoError):
        return EXIT_FAILURE
    if isinstance(error, LlmError):
        return EXIT_TRANSPORT
    if isinstance(error, (ProblemError, GraphError, EvalError, OracleError,
                          AggregationError, ValueError)):
        return EXIT_USAGE
    return EXIT_FAILURE


def build_policy(flags: RunFlags) -> DecisionPolicy:
    if flags["policy"] == "stat":
        return DecisionPolicy(
            STATISTICAL, NullHypothesis(flags["h0"]), resolve_alpha(flags), flags["test"]
        )
    return DecisionPolicy(flags["policy"])


def resolve_alpha(flags: RunFlags) -> float:
    if flags["alpha"] is not None:
        return flags["alpha"]
    return config("CHATPC_ALPHA", default=0.05, cast=float)


def resolve_jobs(flags: RunFlags) -> int:
    if flags["jobs"] is not None:
        return flags["jobs"]
    return config("CHATPC_JOBS", default=1, cast=int)


def build_cassette(flags: RunFlags, problem: Problem) -> Optional[CassetteStore]:
    """Recorded votes replay from memory; otherwise the --cassette file"""
    if flags["votes"]:
        store = CassetteStore(None)
        synthesize_cassette(problem, load_vote_fixture(flags["votes"]), store)
        return store
    if flags["cassette"]:
        return CassetteStore(flags["cassette"])
    return None


def build_oracle(flags: RunFlags, problem: Problem) -> CiOracle:
    oracle = flags["oracle"]
    if oracle == "dsep":
        return DsepOracle()
    if oracle == "noisy":
        noise = NoiseSpec(flags["fiRate"], flags["fdRate"], derive_seed(flags["seed"], "noisy"))
        return NoisyOracle(noise)
    if oracle == "gsq":
        if not flags["data"]:
            raise OracleError("--oracle gsq needs a sample table (--data PATH)")
        data = SampleTable.from_csv(flags["data"], flags["delimiter"])
        return GsqOracle(data, resolve_alpha(flags), flags["minRows"])

    mode = flags["mode"] or (REPLAY_ONLY if flags["votes"] else RECORD)
    llm_config = LlmConfig.from_config(
        base_url=flags["baseUrl"], model=flags["model"], n=flags["n"]
    )
    return LlmOracle(
        llm_config,
        build_policy(flags),
        symmetrize_orders=flags["bothOrders"],
        cassette=build_cassette(flags, problem),
        mode=mode,
    )


def load_problem_for(flags: RunFlags, default: Optional[str] = None) -> Problem:
    name = flags["problem"] or default
    if not name:
        raise ProblemError("--problem is required (a bundled name or a problem file)")
    return resolve_problem(name)


def describe_verdict(verdict: OracleVerdict) -> str:
    """e.g. "DEPENDENT (16-4)", NO-YES counts when answers back the verdict"""
    text = verdict.outcome.value
    counts = combined_tally(verdict)
    if counts.n_total:
        text += f" ({counts.no_yes()})"
    return text


def cmd_query(flags: RunFlags, console: Console) -> OracleVerdict:
    problem = load_problem_for(flags)
    q = CiQuery(flags["x"], flags["y"], tuple(flags["z"]))
    problem.require_query(q)
    oracle = build_oracle(flags, problem)

    with console.status(f"[cyan]🔍 Asking the {oracle.source} oracle about {q}...[/cyan]"):
        verdict = oracle_query(oracle, problem, q)

    console.print(describe_verdict(verdict), highlight=False)
    decision = verdict.decision
    if decision.p_value is not None:
        console.print(f"[dim]p-value:[/dim] {decision.p_value:.4g} [dim](alpha {decision.alpha})[/dim]")
    if verdict.direction_tallies is not None:
        forward, backward = verdict.direction_tallies
        console.print(
            f"[dim]{q.x}, {q.y}:[/dim] {forward.no_yes()}  "
            f"[dim]{q.y}, {q.x}:[/dim] {backward.no_yes()}  [dim](NO-YES)[/dim]"
        )
    return verdict


def _print_graph(console: Console, pdag: Pdag) -> None:
    for u, v in sorted(pdag.directed):
        console.print(f"  [cyan]▸[/cyan] {u} -> {v}", highlight=False)
    for edge in sorted(tuple(sorted(p)) for p in pdag.undirected):
        console.print(f"  [cyan]▸[/cyan] {edge[0]} -- {edge[1]}", highlight=False)


def cmd_discover(flags: RunFlags, console: Console) -> Pdag:
    problem = load_problem_for(flags)
    oracle = CachedOracle(build_oracle(flags, problem))
    opts = PcOptions(
        max_cond_size=flags["maxCondSize"],
        orient=flags["orient"],
        query_budget=flags["budget"],
        jobs=resolve_jobs(flags),
    )
    try:
        with console.status(f"[cyan]🧭 Running PC on {problem.id}...[/cyan]"):
            pdag, trace = run_pc(problem, oracle, opts)
    except QueryBudgetExceeded as error:
        if error.skeleton is not None:
            paths = save_graph(error.skeleton, problem.id, flags["out"], error.trace)
            console.print(f"[bold yellow]⚠️  Partial skeleton written to {paths[0]}[/bold yellow]")
        raise

    comparison = None
    if problem.ground_truth is not None:
        comparison = compare_graphs(pdag, problem.ground_truth)
    paths = save_graph(pdag, problem.id, flags["out"], trace, comparison)

    console.print(f"[bold green]✅ {problem.id}: {trace.total_queries} CI queries[/bold green]")
    _print_graph(console, pdag)
    if comparison is not None:
        console.print(f"[dim]SHD to ground truth:[/dim] {comparison['shd']}")
    for path in paths:
        console.print(f"[dim]wrote[/dim] [cyan]{path}[/cyan]")
    return pdag


def bench_policies(flags: RunFlags) -> List[DecisionPolicy]:
    if flags["policies"]:
        alpha = resolve_alpha(flags)
        return [parse_policy(name, alpha) for name in flags["policies"].split(",") if name.strip()]
    return [build_policy(flags)]


def _bench(flags: RunFlags, console: Console, policies: Sequence[DecisionPolicy],
           problem: Problem, both_orders: bool) -> BenchReport:
    oracle = build_oracle(flags, problem)
    opts = BenchOptions(max_cond_size=flags["maxCondSize"], both_orders=both_orders)
    with console.status(f"[cyan]📊 Querying {problem.id} statements...[/cyan]"):
        report = run_benchmark(problem, oracle, policies, opts)
    report.meta = run_meta()
    return report


def _emit(console: Console, flags: RunFlags, problem: Problem, command: str,
          payload: dict, meta: dict, text: str) -> None:
    json_path = save_report(payload, problem.id, command, flags["out"], meta)
    text_path = save_text(text, f"{problem.id}.{command}.txt", flags["out"])
    console.print(text, highlight=False)
    console.print(f"[dim]wrote[/dim] [cyan]{json_path}[/cyan] [dim]and[/dim] [cyan]{text_path}[/cyan]")


def cmd_bench(flags: RunFlags, console: Console) -> BenchReport:
    problem = load_problem_for(flags)
    report = _bench(flags, console, bench_policies(flags), problem, flags["bothOrders"])
    text = metrics_text(report)
    for name, matrix in report.consistency.items():
        text += consistency_text(matrix, f"Direction consistency, {name}")
    _emit(console, flags, problem, "bench", report.to_payload(), report.meta, text)
    return report


def cmd_consistency(flags: RunFlags, console: Console) -> BenchReport:
    problem = load_problem_for(flags)
    report = _bench(flags, console, bench_policies(flags), problem, both_orders=True)
    text = "".join(
        consistency_text(matrix, f"Direction consistency, {name}")
        for name, matrix in report.consistency.items()
    )
    _emit(console, flags, problem, "consistency", report.to_payload(), report.meta, text)
    return report


def cmd_spurious(flags: RunFlags, console: Console):
    problem = load_problem_for(flags, default="spurious")
    if flags["oracle"] != "llm":
        raise OracleError("spurious needs answer counts: use --oracle llm")
    alpha, test = resolve_alpha(flags), flags["test"] or EXACT
    policies = [
        DecisionPolicy("majority"),
        DecisionPolicy(STATISTICAL, NullHypothesis.NULL_INDEPENDENT, alpha, test),
        DecisionPolicy(STATISTICAL, NullHypothesis.NULL_DEPENDENT, alpha, test),
    ]
    report = _bench(flags, console, policies, problem, flags["bothOrders"])
    rows = spurious_table(report.records, alpha, test)
    payload = report.to_payload()
    payload["spurious"] = [row.to_dict() for row in rows]
    _emit(console, flags, problem, "spurious", payload, report.meta, spurious_text(rows))
    return rows


COMMAND_HANDLERS = {
    "query": cmd_query,
    "discover": cmd_discover,
    "bench": cmd_bench,
    "consistency": cmd_consistency,
    "spurious": cmd_spurious,
}


# Main function
def main(argv: Optional[Sequence[str]] = None) -> int:
    flags = parse_arguments(argv)

    # Show version and exit if --version is enabled
    if flags["version"]:
        Console().print(f"chatpc version {__version__}")
        return EXIT_OK

    if flags["verbose"]:
        set_log_level("DEBUG")
    logger.debug(f"Configuration source: {config.source}")

    console = Console()
    error_console = Console(stderr=True)
    try:
        COMMAND_HANDLERS[flags["command"]](flags, console)
        return EXIT_OK
    except KeyboardInterrupt:
        error_console.print("\n[bold yellow]⚠️  Interrupted[/bold yellow]")
        return EXIT_FAILURE
    except (KnownError, ValueError) as error:
        logger.error(str(error))
        error_console.print(f"[bold red]❌ {error}[/bold red]", highlight=False)
        return exit_code_for(error)
    except Exception as error:
        logger.error(str(error))
        error_console.print(f"[bold red]❌ Unexpected error: {error}[/bold red]", highlight=False)
        return EXIT_FAILURE


if __name__ == "__main__":
    raise SystemExit(main())
