"""Response parsing and the classify/generate request loops.

Malformed responses are retried with the identical prompt up to the
configured bound, then scored as failures; transport problems are never
retried here and propagate immediately. Every generate call returns one
outcome per input requirement, order-aligned, no matter how badly the
response was shaped.
"""

from __future__ import annotations

import json
import re
from typing import Sequence, Union

from ..errors import FormatError
from ..model import ComponentCatalog, ComponentClass, FSR, LocationMap, location_map_from_obj
from ..outcomes import ClassificationFailure, EmptySelection, GenerationFailure
from .prompts import FewShotExample, build_classification_prompt, build_generation_prompt

GenerationOutcome = Union[LocationMap, EmptySelection, GenerationFailure]

_WORD_RE = re.compile(r"[a-z]+")


def extract_json_payload(raw: str):
    """First complete JSON object or array inside free-form text.

    Models wrap JSON in prose and markdown fences; scanning for the
    first parseable object/array strips all of that.
    """
    decoder = json.JSONDecoder()
    for i, ch in enumerate(raw):
        if ch in "{[":
            try:
                obj, _ = decoder.raw_decode(raw, i)
            except ValueError:
                continue
            return obj
    raise FormatError("no JSON object or array in response")


def parse_class_label(raw: str) -> ComponentClass:
    """Extract the single class label asserted by a response."""
    words = set(_WORD_RE.findall(raw.lower()))
    found = {c for c in ComponentClass if c.label in words}
    if len(found) != 1:
        raise FormatError(f"response does not assert exactly one class label: {raw[:80]!r}")
    return found.pop()


def classify_fsr(
    provider,
    fsr: FSR,
    examples: Sequence[FewShotExample],
    catalog: ComponentCatalog,
    template: str,
    max_retries: int = 2,
    strict_grid: bool = True,
) -> Union[ComponentClass, ClassificationFailure]:
    """Ask for the component class of one requirement.

    Returns the class, or a ClassificationFailure after exhausting
    format retries (scored as wrong, never raised). TransportError
    propagates.
    """
    bundle = build_classification_prompt(fsr, examples, catalog, template, strict_grid=strict_grid)
    text = bundle.render_text()
    attempts = 0
    last = ""
    for _ in range(1 + max_retries):
        attempts += 1
        response = provider.complete(text)
        last = response.text
        try:
            return parse_class_label(response.text)
        except FormatError:
            continue
    return ClassificationFailure(
        reason="no class label after retries", attempts=attempts, last_response=last[:200]
    )


def _entry_outcome(entry, catalog: ComponentCatalog) -> GenerationOutcome:
    """One per-requirement answer: a location object or the empty list."""
    if entry == []:
        return EmptySelection()
    if isinstance(entry, dict):
        location_map = location_map_from_obj(entry, catalog)
        if location_map.total == 0:
            return EmptySelection()
        return location_map
    raise FormatError(f"answer entry must be an object or [], got {type(entry).__name__}")


def _parse_generation_response(raw: str, catalog: ComponentCatalog, batch_size: int) -> list[GenerationOutcome]:
    """Parse one response into per-requirement outcomes.

    Raises FormatError if the response as a whole is unusable (the
    caller retries); a partially bad response is reported through the
    returned outcomes instead once retries are exhausted.
    """
    payload = extract_json_payload(raw)
    if batch_size == 1:
        if payload == []:
            entries: list = [[]]
        elif isinstance(payload, list) and len(payload) == 1:
            entries = [payload[0]]
        elif isinstance(payload, dict):
            entries = [payload]
        else:
            raise FormatError("expected a single JSON object or []")
    else:
        if not isinstance(payload, list):
            raise FormatError("batch answer must be a JSON array")
        if len(payload) != batch_size:
            raise FormatError(f"batch answer has {len(payload)} entries, expected {batch_size}")
        entries = list(payload)

    outcomes: list[GenerationOutcome] = []
    errors = 0
    for entry in entries:
        try:
            outcomes.append(_entry_outcome(entry, catalog))
        except FormatError as exc:
            errors += 1
            outcomes.append(GenerationFailure(reason=str(exc)))
    if errors:
        # signal the caller to retry; it keeps this best-effort parse
        # if retries are already exhausted
        raise _PartialParse(outcomes)
    return outcomes


class _PartialParse(FormatError):
    def __init__(self, outcomes: list):
        super().__init__("response parsed partially")
        self.outcomes = outcomes


def generate_location_maps(
    provider,
    fsrs: Sequence[FSR],
    catalog: ComponentCatalog,
    examples: Sequence[FewShotExample],
    template: str,
    max_retries: int = 2,
    strict_grid: bool = True,
) -> list[GenerationOutcome]:
    """Ask for one location map per requirement (single or batch).

    Always returns len(fsrs) outcomes in input order; requirements a
    response failed to cover come back as GenerationFailure so that a
    broken model run stays scoreable end to end.
    """
    bundle = build_generation_prompt(fsrs, catalog, examples, template, strict_grid=strict_grid)
    text = bundle.render_text()
    batch_size = len(fsrs)
    attempts = 0
    last_error = "no response"
    best_effort: list[GenerationOutcome] | None = None
    for _ in range(1 + max_retries):
        attempts += 1
        response = provider.complete(text)
        try:
            return _parse_generation_response(response.text, catalog, batch_size)
        except _PartialParse as partial:
            best_effort = partial.outcomes
            last_error = str(partial)
        except FormatError as exc:
            last_error = str(exc)
    if best_effort is not None:
        return best_effort
    return [
        GenerationFailure(reason=last_error, attempts=attempts)
        for _ in range(batch_size)
    ]
