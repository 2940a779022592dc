#!/usr/bin/env python3
"""Prompt for asking a conditional independence question, and answer parsing"""

import re
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

from chatpc.utils.hashing import stable_digest

from .problems import CiQuery, Problem

TEMPLATE_VERSION = "ci-prompt/2"

Message = Tuple[str, str]

# "[VERDICT (P%)]" or a bare "[VERDICT]"
ANSWER_TOKEN = re.compile(
    r"\[\s*(?:([A-Za-z]+)\s*\(\s*(\d+(?:\.\d+)?)\s*%\s*\)|([A-Za-z]+))\s*\]",
    re.IGNORECASE,
)


class Verdict(str, Enum):
    YES = "YES"
    NO = "NO"
    UNCERTAIN = "UNCERTAIN"


@dataclass(frozen=True)
class PromptBundle:
    messages: Tuple[Message, ...]
    fingerprint: str
    query: Optional[CiQuery] = None
    problem_id: Optional[str] = None

    def as_chat(self) -> List[Dict[str, str]]:
        """Messages in the chat-completions request shape"""
        return [{"role": role, "content": text} for role, text in self.messages]


@dataclass(frozen=True)
class RawAnswer:
    verdict: Verdict
    confidence: Optional[float] = None
    raw_text: str = ""

    def to_dict(self) -> Dict[str, object]:
        return {
            "verdict": self.verdict.value,
            "confidence": self.confidence,
        }


def _ordered_conditioning(z: Sequence[str]) -> Tuple[str, ...]:
    return tuple(sorted(z))


def prompt_fingerprint(problem: Problem, q: CiQuery) -> str:
    """Key of the prompt for (problem, ordered x/y, conditioning set)"""
    problem.require_query(q)
    return stable_digest(
        {
            "problem": problem.id,
            "x": q.x,
            "y": q.y,
            "z": list(_ordered_conditioning(q.z)),
            "template": TEMPLATE_VERSION,
        }
    )


def _statement(x: str, y: str, z: Sequence[str], negated: bool = False) -> str:
    relation = "is not" if negated else "is"
    if not z:
        return f"{x} {relation} independent of {y}"
    return f"{x} {relation} conditionally independent of {y} conditioned on {', '.join(z)}"


def _question(x: str, y: str, z: Sequence[str]) -> str:
    if not z:
        return f"is {x} independent of {y}?"
    return f"is {x} conditionally independent of {y} conditioned on {', '.join(z)}?"


def generate_prompt(problem: Problem, q: CiQuery) -> List[Message]:
    """The three chat messages (system, user, system) for one CI question"""
    z = _ordered_conditioning(q.z)
    involved = [q.x, q.y, *z]

    persona_parts = [
        f"You are a helpful expert in {problem.field} willing to answer questions.",
        "You will be asked to provide your estimate and confidence on statistical "
        "independence between two variables"
        + (" (eventually conditioned on a set of variables)." if z else "."),
        "Your answer should not be based on data or observations, "
        "but only on the available knowledge.",
        "Even when unsure or uncertain, provide a valid answer and uncertainty.",
        "Answer only in the required format.",
    ]

    question_parts = [
        problem.context,
        "Consider the following variables:",
        *[f"{name}: {problem.variable(name).description}" for name in involved],
        _question(q.x, q.y, z),
    ]

    format_parts = [
        "After explaining your reasoning, provide the answer between brackets "
        "as YES/NO, with percentage uncertainty between parenthesis.",
        f'Where YES stands for "{_statement(q.x, q.y, z)}"',
        f'and NO stands for "{_statement(q.x, q.y, z, negated=True)}".',
        "For example [NO (50%)]",
    ]

    return [
        ("system", "\n".join(filter(bool, persona_parts))),
        ("user", "\n".join(filter(bool, question_parts))),
        ("system", "\n".join(filter(bool, format_parts))),
    ]


def build_prompt(problem: Problem, q: CiQuery) -> PromptBundle:
    problem.require_query(q)
    return PromptBundle(
        messages=tuple(generate_prompt(problem, q)),
        fingerprint=prompt_fingerprint(problem, q),
        query=q,
        problem_id=problem.id,
    )


def parse_response(text: Optional[str]) -> RawAnswer:
    """Verdict from the last bracketed token of a completion.

    Never raises: text without a token parses as UNCERTAIN. A percentage
    above 100 keeps the verdict but drops the confidence.
    """
    text = text or ""
    matches = list(ANSWER_TOKEN.finditer(text))
    if not matches:
        return RawAnswer(Verdict.UNCERTAIN, None, text)
    last = matches[-1]
    word = (last.group(1) or last.group(3)).upper()
    if word not in (Verdict.YES.value, Verdict.NO.value):
        return RawAnswer(Verdict.UNCERTAIN, None, text)
    confidence = None
    if last.group(2) is not None:
        percent = float(last.group(2))
        if percent <= 100:
            confidence = percent / 100
    return RawAnswer(Verdict(word), confidence, text)


def parse_completions(texts: Sequence[str]) -> List[RawAnswer]:
    return [parse_response(text) for text in texts]
