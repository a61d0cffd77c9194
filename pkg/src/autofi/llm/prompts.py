"""Deterministic few-shot prompt construction.

Builders are pure functions: identical inputs yield byte-identical
prompt text, which is what makes digest-keyed fixture replay possible.
Templates are plain text files with ``{name}`` placeholders; only the
documented names are substituted, so JSON braces inside a template stay
untouched.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from ..errors import ConfigError, FormatError
from ..model import ComponentCatalog, ComponentClass, FSR, location_map_from_obj

CLASSIFY_N_GRID = (1, 3, 5)
GENERATION_N_GRID = (1, 3, 5, 8)
BATCH_SIZE_GRID = (1, 2, 3, 5)

CLASS_LABELS = tuple(c.label for c in ComponentClass)

_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")


def substitute(template: str, values: dict[str, str]) -> str:
    """Fill ``{name}`` placeholders; unknown names are a ConfigError."""
    unknown = [m for m in _PLACEHOLDER_RE.findall(template) if m not in values]
    if unknown:
        raise ConfigError(f"template uses unknown placeholders: {sorted(set(unknown))}")

    def repl(match: re.Match) -> str:
        return values[match.group(1)]

    return _PLACEHOLDER_RE.sub(repl, template)


def load_template(path) -> str:
    return Path(path).read_text(encoding="utf-8")


@dataclass(frozen=True)
class FewShotExample:
    """One worked example, rendered exactly as the model must answer."""

    fsr_text: str
    expected_output: str


@dataclass(frozen=True)
class PromptBundle:
    """Structured prompt parts plus the template that lays them out."""

    template: str
    catalog_text: str
    examples: tuple[FewShotExample, ...]
    task_text: str
    output_directive: str

    def render_text(self) -> str:
        return substitute(
            self.template,
            {
                "catalog": self.catalog_text,
                "examples": render_examples(self.examples),
                "task": self.task_text,
                "format": self.output_directive,
            },
        )

    def to_messages(self) -> list[dict]:
        return [{"role": "user", "content": self.render_text()}]


def render_catalog(catalog: ComponentCatalog) -> str:
    """Component listing in catalog order, grouped by kind."""
    groups: list[str] = []
    for kind, title in ((ComponentClass.SENSOR, "Sensors:"), (ComponentClass.ACTUATOR, "Actuators:")):
        entries = [e for e in catalog if e.kind is kind]
        if not entries:
            continue
        lines = [title] + [f"- {e.id}: {e.description}" for e in entries]
        groups.append("\n".join(lines))
    return "\n".join(groups)


def render_examples(examples: Sequence[FewShotExample]) -> str:
    blocks = [f"Requirement: {ex.fsr_text}\nAnswer: {ex.expected_output}" for ex in examples]
    return "\n\n".join(blocks)


def _classification_directive() -> str:
    return 'Answer with exactly one word: "sensor" or "actuator". No other text.'


def _generation_directive(batch_size: int) -> str:
    rules = (
        "For a requirement, the answer is a JSON object with one key per listed "
        "component id and a value of 1 (inject a fault there) or 0 (do not). "
        "Select at most two components. If no listed component applies to the "
        "requirement, the answer is an empty JSON array [] instead."
    )
    if batch_size == 1:
        return rules + " Respond with the JSON answer only, no other text."
    return (
        rules
        + f" Respond with a single JSON array of exactly {batch_size} answers, "
        "one per requirement in the given order, no other text."
    )


def build_classification_prompt(
    fsr: FSR,
    examples: Sequence[FewShotExample],
    catalog: ComponentCatalog,
    template: str,
    strict_grid: bool = True,
) -> PromptBundle:
    """Prompt asking for the component class of one requirement."""
    if strict_grid and len(examples) not in CLASSIFY_N_GRID:
        raise ConfigError(f"classification example count must be one of {CLASSIFY_N_GRID}, got {len(examples)}")
    for ex in examples:
        if ex.expected_output.strip().lower() not in CLASS_LABELS:
            raise ConfigError(f"example answer {ex.expected_output!r} is not a class label")
    return PromptBundle(
        template=template,
        catalog_text=render_catalog(catalog),
        examples=tuple(examples),
        task_text=fsr.text,
        output_directive=_classification_directive(),
    )


def build_generation_prompt(
    fsrs: Sequence[FSR],
    catalog: ComponentCatalog,
    examples: Sequence[FewShotExample],
    template: str,
    strict_grid: bool = True,
) -> PromptBundle:
    """Prompt asking for one location map per requirement.

    The catalog section lists exactly the currently supported
    components; anything dropped from the catalog cannot appear in the
    prompt, and therefore can never be selected by a conforming answer.
    """
    if strict_grid and len(fsrs) not in BATCH_SIZE_GRID:
        raise ConfigError(f"batch size must be one of {BATCH_SIZE_GRID}, got {len(fsrs)}")
    if strict_grid and len(examples) not in GENERATION_N_GRID:
        raise ConfigError(f"generation example count must be one of {GENERATION_N_GRID}, got {len(examples)}")
    if not fsrs:
        raise ConfigError("generation prompt needs at least one requirement")
    for ex in examples:
        _check_generation_example(ex, catalog)
    task_lines = [f"{i + 1}. {fsr.text}" for i, fsr in enumerate(fsrs)]
    return PromptBundle(
        template=template,
        catalog_text=render_catalog(catalog),
        examples=tuple(examples),
        task_text="\n".join(task_lines),
        output_directive=_generation_directive(len(fsrs)),
    )


def _check_generation_example(ex: FewShotExample, catalog: ComponentCatalog) -> None:
    """Example answers must parse under the live-response parser."""
    try:
        obj = json.loads(ex.expected_output)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"example answer is not JSON: {exc}") from None
    if obj == []:
        return
    try:
        location_map_from_obj(obj, catalog)
    except FormatError as exc:
        raise ConfigError(f"example answer does not fit the catalog: {exc}") from None
