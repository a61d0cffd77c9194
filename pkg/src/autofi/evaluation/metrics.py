"""Accuracy and macro-averaged F1 over classification and generation outputs.

Both metrics run over one uniform representation: each prediction and
each gold answer is the *set of positive labels* it asserts. A class
label prediction is a singleton set; a location map contributes its
active component ids; a failure asserts nothing (empty set) and is
additionally barred from ever counting as an exact match.

Per-class F1 is 2*P*R/(P+R) with the 0/0 convention F1 = 0; the macro
score is the unweighted mean over a class set fixed a priori (the two
component classes for classification, one class per catalog component
for generation).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Hashable, Iterable, Mapping, Sequence, Union

from ..errors import EmptyInput, LengthMismatch
from ..model import ComponentCatalog, ComponentClass, LocationMap
from ..outcomes import EmptySelection, Failure

Label = Hashable
Positives = Union[frozenset, set]


def pct_round(fraction: float) -> float:
    """Percentage rounded half-up to one decimal (71.25% -> 71.3)."""
    return float(Decimal(repr(fraction * 100)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def positives_of(answer) -> frozenset:
    """Positive-label set asserted by one prediction or gold answer."""
    if isinstance(answer, Failure) or isinstance(answer, EmptySelection):
        return frozenset()
    if isinstance(answer, ComponentClass):
        return frozenset({answer})
    if isinstance(answer, LocationMap):
        return frozenset(answer.active)
    if isinstance(answer, (set, frozenset)):
        return frozenset(answer)
    raise TypeError(f"cannot derive positives from {type(answer).__name__}")


def _check_lengths(predictions: Sequence, golds: Sequence) -> None:
    if len(predictions) != len(golds):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(golds)} golds")


def exact_match(prediction, gold) -> bool:
    """Whether one prediction matches its gold answer exactly.

    Failures never match. Everything else matches on its positive set,
    so an EmptySelection equals an all-zero gold map.
    """
    if isinstance(prediction, Failure):
        return False
    return positives_of(prediction) == positives_of(gold)


def accuracy(predictions: Sequence, golds: Sequence) -> float:
    """Exact-match fraction over aligned prediction/gold pairs."""
    _check_lengths(predictions, golds)
    if not predictions:
        raise EmptyInput("cannot score an empty prediction set")
    hits = sum(1 for p, g in zip(predictions, golds) if exact_match(p, g))
    return hits / len(predictions)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def f1(self) -> float:
        denom = 2 * self.tp + self.fp + self.fn
        return (2 * self.tp / denom) if denom else 0.0


def confusion_counts(
    predictions: Sequence, golds: Sequence, classes: Iterable[Label]
) -> dict[Label, ConfusionCounts]:
    _check_lengths(predictions, golds)
    classes = list(classes)
    if not classes:
        raise EmptyInput("class set must be non-empty")
    counts = {c: [0, 0, 0, 0] for c in classes}  # tp, fp, fn, tn
    for p, g in zip(predictions, golds):
        pos_p = positives_of(p)
        pos_g = positives_of(g)
        for c in classes:
            in_p, in_g = c in pos_p, c in pos_g
            if in_p and in_g:
                counts[c][0] += 1
            elif in_p:
                counts[c][1] += 1
            elif in_g:
                counts[c][2] += 1
            else:
                counts[c][3] += 1
    return {c: ConfusionCounts(*v) for c, v in counts.items()}


def f1_per_class(
    predictions: Sequence, golds: Sequence, classes: Iterable[Label]
) -> dict[Label, float]:
    return {c: cc.f1() for c, cc in confusion_counts(predictions, golds, classes).items()}


def f1_macro(predictions: Sequence, golds: Sequence, classes: Iterable[Label]) -> float:
    """Unweighted mean of per-class F1 over the fixed class set."""
    per_class = f1_per_class(predictions, golds, classes)
    return sum(per_class.values()) / len(per_class)


CLASSIFICATION_CLASSES = (ComponentClass.SENSOR, ComponentClass.ACTUATOR)


@dataclass(frozen=True)
class MetricsReport:
    """Scores for one grid cell of one trial, plus bookkeeping needed to
    reproduce token-budget comparisons between cells."""

    trial: str
    model: str
    n_examples: int
    batch_size: int
    accuracy: float
    f1_macro: float
    per_class_f1: Mapping[str, float] = field(default_factory=dict)
    n_scored: int = 0
    n_pool: int = 0
    failure_count: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0

    @property
    def accuracy_pct(self) -> float:
        return pct_round(self.accuracy)

    @property
    def f1_macro_pct(self) -> float:
        return pct_round(self.f1_macro)

    def to_json_obj(self) -> dict:
        return {
            "schema_version": 1,
            "trial": self.trial,
            "model": self.model,
            "n_examples": self.n_examples,
            "batch_size": self.batch_size,
            "accuracy": self.accuracy,
            "f1_macro": self.f1_macro,
            "accuracy_pct": self.accuracy_pct,
            "f1_macro_pct": self.f1_macro_pct,
            "per_class_f1": dict(self.per_class_f1),
            "n_scored": self.n_scored,
            "n_pool": self.n_pool,
            "failure_count": self.failure_count,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "MetricsReport":
        return cls(
            trial=obj["trial"],
            model=obj["model"],
            n_examples=int(obj["n_examples"]),
            batch_size=int(obj["batch_size"]),
            accuracy=float(obj["accuracy"]),
            f1_macro=float(obj["f1_macro"]),
            per_class_f1={k: float(v) for k, v in obj.get("per_class_f1", {}).items()},
            n_scored=int(obj.get("n_scored", 0)),
            n_pool=int(obj.get("n_pool", 0)),
            failure_count=int(obj.get("failure_count", 0)),
            prompt_tokens=int(obj.get("prompt_tokens", 0)),
            completion_tokens=int(obj.get("completion_tokens", 0)),
        )


def score_classification_cell(
    predictions: Sequence,
    golds: Sequence[ComponentClass],
    *,
    trial: str,
    model: str,
    n_examples: int,
    n_pool: int = 0,
    prompt_tokens: int = 0,
    completion_tokens: int = 0,
) -> MetricsReport:
    per_class = f1_per_class(predictions, golds, CLASSIFICATION_CLASSES)
    return MetricsReport(
        trial=trial,
        model=model,
        n_examples=n_examples,
        batch_size=1,
        accuracy=accuracy(predictions, golds),
        f1_macro=sum(per_class.values()) / len(per_class),
        per_class_f1={c.label: v for c, v in per_class.items()},
        n_scored=len(golds),
        n_pool=n_pool,
        failure_count=sum(1 for p in predictions if isinstance(p, Failure)),
        prompt_tokens=prompt_tokens,
        completion_tokens=completion_tokens,
    )


def score_generation_cell(
    outcomes: Sequence,
    gold_maps: Sequence[LocationMap],
    catalog: ComponentCatalog,
    *,
    trial: str,
    model: str,
    n_examples: int,
    batch_size: int = 1,
    n_pool: int = 0,
    prompt_tokens: int = 0,
    completion_tokens: int = 0,
) -> MetricsReport:
    """Score one generation cell; class set = the catalog's components.

    Gold maps must already be expressed over ``catalog`` (for a reduced
    catalog, project gold locations onto it first; a fully projected-out
    gold becomes the all-zero map, whose correct answer is an empty
    selection).
    """
    classes = list(catalog.ids)
    per_class = f1_per_class(outcomes, gold_maps, classes)
    return MetricsReport(
        trial=trial,
        model=model,
        n_examples=n_examples,
        batch_size=batch_size,
        accuracy=accuracy(outcomes, gold_maps),
        f1_macro=sum(per_class.values()) / len(per_class),
        per_class_f1={str(c): v for c, v in per_class.items()},
        n_scored=len(gold_maps),
        n_pool=n_pool,
        failure_count=sum(1 for p in outcomes if isinstance(p, Failure)),
        prompt_tokens=prompt_tokens,
        completion_tokens=completion_tokens,
    )
