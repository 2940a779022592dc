from argparse import ArgumentParser, BooleanOptionalAction, Namespace
from typing import List, Optional, Sequence, TypedDict

COMMANDS = ("query", "discover", "bench", "consistency", "spurious")


class RunFlags(TypedDict):
    command: Optional[str]
    problem: Optional[str]
    oracle: str
    policy: str
    h0: str
    alpha: Optional[float]
    test: str
    n: Optional[int]
    maxCondSize: Optional[int]
    bothOrders: bool
    cassette: Optional[str]
    mode: Optional[str]
    baseUrl: Optional[str]
    model: Optional[str]
    jobs: Optional[int]
    seed: int
    out: Optional[str]
    votes: Optional[str]
    fiRate: float
    fdRate: float
    data: Optional[str]
    delimiter: str
    minRows: int
    policies: Optional[str]
    orient: bool
    budget: Optional[int]
    verbose: bool
    version: bool
    x: Optional[str]
    y: Optional[str]
    z: List[str]


def _common_arguments() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument(
        "--problem", type=str, default=None,
        help="Bundled problem name or path to a problem file",
    )
    common.add_argument(
        "--oracle", choices=["dsep", "llm", "noisy", "gsq"], default="dsep",
        help="Conditional independence oracle",
    )
    common.add_argument(
        "--policy", choices=["majority", "weighted", "stat", "unanimous"],
        default="majority", help="How sampled answers become a decision",
    )
    common.add_argument(
        "--h0", choices=["indep", "dep"], default="indep",
        help="Null hypothesis of the statistical policy",
    )
    common.add_argument("--alpha", type=float, default=None, help="Significance level")
    common.add_argument(
        "--test", choices=["exact", "normal"], default="exact",
        help="Test behind the statistical policy",
    )
    common.add_argument("--n", type=int, default=None, help="Answers sampled per prompt")
    common.add_argument(
        "--max-cond-size", dest="maxCondSize", type=int, default=None,
        help="Largest conditioning set to query",
    )
    common.add_argument(
        "--both-orders", dest="bothOrders", action=BooleanOptionalAction, default=True,
        help="Ask (x, y) and (y, x) and pool the answers",
    )
    common.add_argument("--cassette", type=str, default=None, help="Record/replay file")
    mode = common.add_mutually_exclusive_group()
    mode.add_argument(
        "--record", dest="mode", action="store_const", const="record",
        help="Replay recorded completions, query the model on a miss and record",
    )
    mode.add_argument(
        "--replay-only", dest="mode", action="store_const", const="replay_only",
        help="Never contact the model; a missing completion is an error",
    )
    common.add_argument("--base-url", dest="baseUrl", type=str, default=None)
    common.add_argument("--model", type=str, default=None)
    common.add_argument("--jobs", type=int, default=None, help="Parallel CI queries")
    common.add_argument("--seed", type=int, default=0, help="Top-level random seed")
    common.add_argument("--out", type=str, default=None, help="Output directory")
    common.add_argument(
        "--votes", type=str, default=None,
        help="Replay recorded vote counts (bundled name or file)",
    )
    common.add_argument(
        "--fi-rate", dest="fiRate", type=float, default=0.0,
        help="Noisy oracle: rate of dependent statements answered independent",
    )
    common.add_argument(
        "--fd-rate", dest="fdRate", type=float, default=0.0,
        help="Noisy oracle: rate of independent statements answered dependent",
    )
    common.add_argument("--data", type=str, default=None, help="Sample table for --oracle gsq")
    common.add_argument("--delimiter", type=str, default=",")
    common.add_argument("--min-rows", dest="minRows", type=int, default=10)
    common.add_argument(
        "--policies", type=str, default=None,
        help="Comma-separated policy names for bench, e.g. majority,stat_indep_exact",
    )
    common.add_argument(
        "--no-orient", dest="orient", action="store_false",
        help="Stop after the skeleton",
    )
    common.add_argument("--budget", type=int, default=None, help="Maximum CI queries")
    common.add_argument("--verbose", action="store_true", help="Debug logging")
    return common


def build_parser() -> ArgumentParser:
    common = _common_arguments()
    parser = ArgumentParser(
        description="Causal discovery with a language model as the independence oracle.",
        allow_abbrev=False,
    )
    parser.add_argument("--version", "-v", action="store_true", help="Show version information")
    commands = parser.add_subparsers(dest="command")

    query = commands.add_parser("query", parents=[common], help="Ask one CI question")
    query.add_argument("x")
    query.add_argument("y")
    query.add_argument("z", nargs="*", help="Conditioning variables")

    commands.add_parser("discover", parents=[common], help="Run PC and write the graph")
    commands.add_parser("bench", parents=[common], help="Score an oracle on every CI statement")
    commands.add_parser(
        "consistency", parents=[common], help="Compare answers for (x, y) and (y, x)"
    )
    commands.add_parser(
        "spurious", parents=[common], help="Voting and tests on the spurious pairs"
    )
    return parser


# Function to parse command-line arguments
def parse_arguments(argv: Optional[Sequence[str]] = None) -> RunFlags:
    parser = build_parser()
    args: Namespace = parser.parse_args(argv)
    if args.command is None and not args.version:
        parser.error(f"a command is required: {', '.join(COMMANDS)}")

    def get(name, default=None):
        return getattr(args, name, default)

    return RunFlags(
        command=args.command,
        problem=get("problem"),
        oracle=get("oracle", "dsep"),
        policy=get("policy", "majority"),
        h0=get("h0", "indep"),
        alpha=get("alpha"),
        test=get("test", "exact"),
        n=get("n"),
        maxCondSize=get("maxCondSize"),
        bothOrders=get("bothOrders", True),
        cassette=get("cassette"),
        mode=get("mode"),
        baseUrl=get("baseUrl"),
        model=get("model"),
        jobs=get("jobs"),
        seed=get("seed", 0),
        out=get("out"),
        votes=get("votes"),
        fiRate=get("fiRate", 0.0),
        fdRate=get("fdRate", 0.0),
        data=get("data"),
        delimiter=get("delimiter", ","),
        minRows=get("minRows", 10),
        policies=get("policies"),
        orient=get("orient", True),
        budget=get("budget"),
        verbose=get("verbose", False),
        version=args.version,
        x=get("x"),
        y=get("y"),
        z=list(get("z") or []),
    )
