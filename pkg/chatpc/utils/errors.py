#!/usr/bin/env python3
"""Error hierarchy shared by every chatpc module"""

from typing import Optional, Sequence, Tuple


class KnownError(Exception):
    pass


# Graph


class GraphError(KnownError):
    pass


class CycleDetected(GraphError):
    def __init__(self, cycle: Sequence[Tuple[str, str]]):
        self.cycle = list(cycle)
        path = " -> ".join([u for u, _ in self.cycle] + [self.cycle[0][0]])
        super().__init__(f"Graph contains a directed cycle: {path}")


class UnknownNode(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class InvalidQuery(GraphError):
    pass


class NodeSetMismatch(GraphError):
    pass


class OrientationConflict(GraphError):
    pass


# Problems


class ProblemError(KnownError):
    pass


class SchemaError(ProblemError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class NoGroundTruth(ProblemError):
    pass


class UnknownVariable(ProblemError):
    pass


# LLM client


class LlmError(KnownError):
    pass


class AuthError(LlmError):
    pass


class TransportError(LlmError):
    def __init__(self, message: str, attempts: int = 1):
        self.attempts = attempts
        super().__init__(message)


class RateLimited(LlmError):
    def __init__(self, message: str, retry_after: Optional[float] = None):
        self.retry_after = retry_after
        super().__init__(message)


class MalformedProviderReply(LlmError):
    pass


class StoreIoError(LlmError):
    pass


class CassetteMiss(LlmError):
    pass


# Aggregation


class AggregationError(KnownError):
    pass


class NoDecisiveAnswers(AggregationError):
    pass


# Oracles


class OracleError(KnownError):
    pass


class ColumnMissing(OracleError):
    pass


class InsufficientData(OracleError):
    pass


# PC


class PcError(KnownError):
    pass


class QueryBudgetExceeded(PcError):
    def __init__(self, message: str, skeleton=None, sepsets=None, trace=None):
        self.skeleton = skeleton
        self.sepsets = sepsets
        self.trace = trace
        super().__init__(message)


# Evaluation


class EvalError(KnownError):
    pass


class UnknownPolicy(EvalError):
    pass


class MissingDirection(EvalError):
    pass
