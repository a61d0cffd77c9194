"""FSR dataset files and the deterministic few-shot example split.

A dataset is JSON Lines, one requirement per line. The first
``pool_size`` entries form the example pool and must be fully
gold-labeled; everything after them is the evaluation split. Example
selection is positional (first N eligible pool entries in file order):
determinism beats cleverness here, because fixture replay hangs off the
exact prompt bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import ConfigError, FormatError
from .llm.prompts import FewShotExample
from .model import FSR, ComponentCatalog, ComponentClass, LocationMap

DEFAULT_POOL_SIZE = 10


@dataclass(frozen=True)
class FsrDataset:
    fsrs: tuple[FSR, ...]
    pool_size: int

    def __post_init__(self):
        if not 0 <= self.pool_size <= len(self.fsrs):
            raise ConfigError(f"pool size {self.pool_size} exceeds dataset size {len(self.fsrs)}")
        for fsr in self.fsrs[: self.pool_size]:
            if fsr.gold_class is None:
                raise ConfigError(f"pool FSR {fsr.id} must carry gold_class")

    @property
    def pool(self) -> tuple[FSR, ...]:
        return self.fsrs[: self.pool_size]

    @property
    def eval_split(self) -> tuple[FSR, ...]:
        return self.fsrs[self.pool_size :]

    def eval_of_class(self, kind: ComponentClass) -> tuple[FSR, ...]:
        return tuple(f for f in self.eval_split if f.gold_class is kind)

    def classification_examples(self, n: int) -> list[FewShotExample]:
        eligible = [f for f in self.pool if f.gold_class is not None]
        if len(eligible) < n:
            raise ConfigError(f"pool has only {len(eligible)} class-labeled FSRs, need {n}")
        return [FewShotExample(f.text, f.gold_class.label) for f in eligible[:n]]

    def generation_examples(self, n: int, catalog: ComponentCatalog) -> list[FewShotExample]:
        """Sensor-class pool FSRs rendered against the trial catalog.

        Gold locations are projected onto the catalog; an example whose
        locations were all dropped renders the empty-list answer, which
        teaches the refusal behavior.
        """
        eligible = [
            f
            for f in self.pool
            if f.gold_class is ComponentClass.SENSOR and f.gold_locations is not None
        ]
        if len(eligible) < n:
            raise ConfigError(f"pool has only {len(eligible)} location-labeled sensor FSRs, need {n}")
        examples = []
        for f in eligible[:n]:
            gold = gold_map(f, catalog)
            answer = "[]" if gold.total == 0 else json.dumps(gold.to_json_obj())
            examples.append(FewShotExample(f.text, answer))
        return examples


def gold_map(fsr: FSR, catalog: ComponentCatalog) -> LocationMap:
    """Gold locations projected onto a catalog (dropped ids vanish)."""
    if fsr.gold_locations is None:
        raise ConfigError(f"FSR {fsr.id} has no gold locations")
    active = [c for c in fsr.gold_locations if c in catalog]
    return LocationMap.select(catalog, active)


def load_dataset(path, pool_size: int = DEFAULT_POOL_SIZE) -> FsrDataset:
    path = Path(path)
    fsrs: list[FSR] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                fsr = FSR.from_json_obj(obj)
            except (json.JSONDecodeError, KeyError, ValueError, FormatError) as exc:
                raise FormatError(f"{path}:{lineno}: bad FSR record: {exc}") from None
            if fsr.id in seen:
                raise FormatError(f"{path}:{lineno}: duplicate FSR id {fsr.id}")
            seen.add(fsr.id)
            fsrs.append(fsr)
    return FsrDataset(fsrs=tuple(fsrs), pool_size=pool_size)


def save_dataset(fsrs: Sequence[FSR], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for fsr in fsrs:
            fh.write(json.dumps(fsr.to_json_obj()) + "\n")
