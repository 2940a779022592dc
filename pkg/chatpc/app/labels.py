#!/usr/bin/env python3
"""Verdict vocabularies shared across the package"""

from enum import Enum


class CiLabel(str, Enum):
    INDEPENDENT = "INDEPENDENT"
    DEPENDENT = "DEPENDENT"


class Outcome(str, Enum):
    INDEPENDENT = "INDEPENDENT"
    DEPENDENT = "DEPENDENT"
    UNDECIDED = "UNDECIDED"

    def as_label(self):
        """CiLabel for decided outcomes, None for UNDECIDED"""
        if self is Outcome.UNDECIDED:
            return None
        return CiLabel(self.value)
