#!/usr/bin/env python3
"""Build the bundled fixture recording for the offline demo pipeline.

For every request the demo trials will issue (classification N grid,
single-TC N grid, batch BS x N grid, dropped-sensor N grid), this script
renders the exact prompt through the package's own builders, computes
its digest and freezes a response.

Responses are constructed against per-cell score targets: a deterministic
error plan (which requirements are answered wrongly, and how) is applied
to the gold answers, and an independent local metric implementation
(not the package's) asserts that each cell lands exactly on its target
percentages before anything is written. Rerun whenever the dataset,
templates, catalogs or prompt builders change.
"""

from __future__ import annotations

import json
import random
import sys
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from autofi.config import bundled
from autofi.dataset import gold_map, load_dataset
from autofi.llm.prompts import build_classification_prompt, build_generation_prompt, load_template
from autofi.llm.provider import prompt_digest
from autofi.model import ComponentCatalog, ComponentClass

SEED = 424242
MODEL = "gpt-4o"
OUT = Path(__file__).resolve().parents[1] / "src" / "autofi" / "data" / "fixtures" / f"{MODEL}.jsonl"

# classification cells: N -> (correct sensors of 97, correct actuators of 37)
CLASSIFY_PLAN = {1: (90, 31), 3: (85, 31), 5: (82, 32)}
CLASSIFY_TARGETS = {1: (90.3, 88.0), 3: (86.6, 84.0), 5: (85.1, 82.7)}

# single-TC cells: N -> list of error ops; op = (kind, gold_shape, arg)
#   ("ADD", "APP", extra)  : APP-single answered {APP, extra}
#   ("SWAP", "APP", other) : APP-single answered {other}
#   ("EMPTY", "ST", None)  : ST-single answered []
SINGLE_PLAN = {
    1: [("ADD", "APP", "WSA"), ("ADD", "APP", "WSA"), ("ADD", "APP", "WS"),
        ("ADD", "APP", "WS"), ("SWAP", "APP", "YR")],
    3: [("ADD", "APP", "WSA")] * 4 + [("EMPTY", "ST", None)],
    5: [("ADD", "APP", "WSA")] * 4,
    8: [("ADD", "APP", "WSA"), ("ADD", "APP", "WSA"), ("ADD", "APP", "YR"), ("ADD", "APP", "YR")],
}
SINGLE_TARGETS = {1: (94.8, 97.0), 3: (94.8, 95.8), 5: (95.9, 96.7), 8: (95.9, 97.5)}

BATCH_BS = (2, 3, 5)
GEN_N = (1, 3, 5, 8)
DROPPED = ("WSA", "ST")


def pct(x: float) -> float:
    return float(Decimal(repr(x * 100)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def local_scores(pred_sets, gold_sets, classes) -> tuple[float, float]:
    """Independent accuracy / macro-F1 over positive-label sets."""
    acc = sum(1 for p, g in zip(pred_sets, gold_sets) if p == g) / len(gold_sets)
    f1s = []
    for c in classes:
        tp = sum(1 for p, g in zip(pred_sets, gold_sets) if c in p and c in g)
        fp = sum(1 for p, g in zip(pred_sets, gold_sets) if c in p and c not in g)
        fn = sum(1 for p, g in zip(pred_sets, gold_sets) if c not in p and c in g)
        den = 2 * tp + fp + fn
        f1s.append(2 * tp / den if den else 0.0)
    return pct(acc), pct(sum(f1s) / len(f1s))


def dress(rng: random.Random, payload: str) -> str:
    """Occasionally wrap the payload the way chatty models do."""
    roll = rng.random()
    if roll < 0.12:
        return f"Here is the result:\n```json\n{payload}\n```"
    if roll < 0.20:
        return f"{payload}\nLet me know if you need anything else."
    return payload


def tokens_for(prompt: str, response: str) -> tuple[int, int]:
    return max(1, len(prompt) // 4), max(1, len(response) // 4)


class Recorder:
    def __init__(self):
        self.records: dict[str, dict] = {}

    def add(self, prompt: str, response: str) -> None:
        # identical prompts must replay identically (a seeded provider
        # would answer the same), so the first recorded response wins;
        # happens when a trailing batch chunk of one requirement renders
        # the same prompt as the single-TC trial
        digest = prompt_digest(prompt, MODEL)
        if digest in self.records:
            return
        pt, ct = tokens_for(prompt, response)
        self.records[digest] = {
            "digest": digest,
            "response_text": response,
            "prompt_tokens": pt,
            "completion_tokens": ct,
        }

    def write(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.records.values():
                fh.write(json.dumps(rec) + "\n")


def map_json(catalog: ComponentCatalog, active: set[str]) -> str:
    return json.dumps({cid: (1 if cid in active else 0) for cid in catalog.ids})


def build_classification(rec: Recorder, rng: random.Random, dataset, components, classify_tpl) -> None:
    evals = dataset.eval_split
    golds = [f.gold_class for f in evals]
    sensor_idx = [i for i, g in enumerate(golds) if g is ComponentClass.SENSOR]
    actuator_idx = [i for i, g in enumerate(golds) if g is ComponentClass.ACTUATOR]
    flip = {ComponentClass.SENSOR: "actuator", ComponentClass.ACTUATOR: "sensor"}

    for n, (cs, ca) in CLASSIFY_PLAN.items():
        examples = dataset.classification_examples(n)
        wrong = set(rng.sample(sensor_idx, 97 - cs)) | set(rng.sample(actuator_idx, 37 - ca))
        pred_sets, gold_sets = [], []
        for i, fsr in enumerate(evals):
            answer = flip[golds[i]] if i in wrong else golds[i].label
            prompt = build_classification_prompt(fsr, examples, components, classify_tpl).render_text()
            rec.add(prompt, dress(rng, answer))
            pred_sets.append({answer})
            gold_sets.append({golds[i].label})
        got = local_scores(pred_sets, gold_sets, ["sensor", "actuator"])
        assert got == CLASSIFY_TARGETS[n], f"classify N={n}: {got} != {CLASSIFY_TARGETS[n]}"
        print(f"classify N={n}: acc/f1 = {got}")


def plan_errors(rng: random.Random, fsrs, golds, plan):
    """Assign each error op to a concrete requirement index.

    The last requirement stays error-free: its single-TC prompt is also
    the trailing one-entry batch chunk, and the batch cells are meant to
    score all-correct.
    """
    last = len(golds) - 1
    by_shape: dict[str, list[int]] = {}
    for i, g in enumerate(golds):
        if len(g) == 1 and i != last:
            by_shape.setdefault(next(iter(g)), []).append(i)
    assignments: dict[int, tuple[str, str | None]] = {}
    for kind, shape, arg in plan:
        candidates = [i for i in by_shape.get(shape, []) if i not in assignments]
        idx = rng.choice(candidates)
        assignments[idx] = (kind, arg)
    return assignments


def answer_sets(golds, assignments) -> list[set[str]]:
    out = []
    for i, g in enumerate(golds):
        if i not in assignments:
            out.append(set(g))
            continue
        kind, arg = assignments[i]
        if kind == "ADD":
            out.append(set(g) | {arg})
        elif kind == "SWAP":
            out.append({arg})
        elif kind == "EMPTY":
            out.append(set())
        else:
            raise ValueError(kind)
    return out


def build_single(rec: Recorder, rng: random.Random, dataset, sensors, generate_tpl) -> None:
    fsrs = dataset.eval_of_class(ComponentClass.SENSOR)
    golds = [set(gold_map(f, sensors).active) for f in fsrs]
    for n, plan in SINGLE_PLAN.items():
        examples = dataset.generation_examples(n, sensors)
        assignments = plan_errors(rng, fsrs, golds, plan)
        preds = answer_sets(golds, assignments)
        for fsr, pred in zip(fsrs, preds):
            prompt = build_generation_prompt([fsr], sensors, examples, generate_tpl).render_text()
            payload = "[]" if not pred else map_json(sensors, pred)
            rec.add(prompt, dress(rng, payload))
        got = local_scores(preds, golds, list(sensors.ids))
        assert got == SINGLE_TARGETS[n], f"single N={n}: {got} != {SINGLE_TARGETS[n]}"
        print(f"single N={n}: acc/f1 = {got}")


def build_batch(rec: Recorder, rng: random.Random, dataset, sensors, generate_tpl) -> None:
    fsrs = list(dataset.eval_of_class(ComponentClass.SENSOR))
    golds = [set(gold_map(f, sensors).active) for f in fsrs]
    for bs in BATCH_BS:
        for n in GEN_N:
            examples = dataset.generation_examples(n, sensors)
            for start in range(0, len(fsrs), bs):
                batch = fsrs[start : start + bs]
                strict = len(batch) == bs
                prompt = build_generation_prompt(
                    batch, sensors, examples, generate_tpl, strict_grid=strict
                ).render_text()
                entries = [json.loads(map_json(sensors, golds[start + j])) for j in range(len(batch))]
                rec.add(prompt, dress(rng, json.dumps(entries)))
    print(f"batch cells: all-correct responses for BS {BATCH_BS} x N {GEN_N}")


def build_dropped(rec: Recorder, rng: random.Random, dataset, sensors, generate_tpl) -> None:
    reduced = sensors.drop(DROPPED)
    fsrs = dataset.eval_of_class(ComponentClass.SENSOR)
    empties = []
    for n in GEN_N:
        examples = dataset.generation_examples(n, reduced)
        for fsr in fsrs:
            gold = gold_map(fsr, reduced)
            payload = "[]" if gold.total == 0 else json.dumps(gold.to_json_obj())
            prompt = build_generation_prompt([fsr], reduced, examples, generate_tpl).render_text()
            rec.add(prompt, dress(rng, payload))
            if n == GEN_N[0] and gold.total == 0:
                empties.append(fsr.id)
    print(f"dropped cells: all-correct; empty-selection negatives = {empties}")
    assert len(empties) == 2


def main() -> int:
    rng = random.Random(SEED)
    dataset = load_dataset(bundled("fsr", "dataset.jsonl"))
    components = ComponentCatalog.load(bundled("catalog", "components.json"))
    sensors = ComponentCatalog.load(bundled("catalog", "sensors.json"))
    classify_tpl = load_template(bundled("templates", "classify.txt"))
    generate_tpl = load_template(bundled("templates", "generate.txt"))

    rec = Recorder()
    build_classification(rec, rng, dataset, components, classify_tpl)
    build_single(rec, rng, dataset, sensors, generate_tpl)
    build_batch(rec, rng, dataset, sensors, generate_tpl)
    build_dropped(rec, rng, dataset, sensors, generate_tpl)
    rec.write(OUT)
    print(f"wrote {len(rec.records)} records to {OUT}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
