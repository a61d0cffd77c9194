"""Per-requirement outcomes of the generation and classification steps.

A failure is an outcome, not an exception: malformed provider responses
must stay scoreable (they count as all-zero predictions and never as
exact matches), so pipelines return these values in input order instead
of raising.
"""

from __future__ import annotations

from dataclasses import dataclass


class Failure:
    """Marker base: outcomes that never match any gold answer."""


@dataclass(frozen=True)
class ClassificationFailure(Failure):
    reason: str
    attempts: int = 0
    last_response: str = ""


@dataclass(frozen=True)
class GenerationFailure(Failure):
    reason: str
    attempts: int = 0
    last_response: str = ""


@dataclass(frozen=True)
class EmptySelection:
    """The model correctly declined to select any supported component.

    Distinct from a failure: this is a well-formed answer. It is the
    expected output when no currently supported component applies, and
    it normalizes to the all-zero location map for scoring.
    """
