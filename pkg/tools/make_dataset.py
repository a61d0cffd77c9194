#!/usr/bin/env python3
"""Generate the bundled synthetic FSR dataset.

Layout contract (see autofi.dataset):
  * first 10 lines: the few-shot example pool, fully gold-labeled,
    with 8 sensor FSRs carrying gold locations (enough for N=8) and 2
    actuator FSRs interleaved so classification examples show both
    labels from N=2 upward;
  * remaining 134 lines: the evaluation split, 97 sensor-related and
    37 actuator-related requirements; sensor FSRs carry gold location
    maps over the five supported sensors with exactly two requirements
    whose locations are only WSA/ST (the dropped-sensor negatives).

Deterministic: same seed, same file. Rerun after changing anything
here, then rerun make_fixtures.py (fixture digests depend on texts).
"""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

SEED = 20250810
OUT = Path(__file__).resolve().parents[1] / "src" / "autofi" / "data" / "fsr" / "dataset.jsonl"

ALIASES = {
    "APP": ["accelerator pedal position", "driver acceleration demand", "accelerator pedal travel signal"],
    "WSA": ["steering wheel angle", "road-wheel steering angle signal"],
    "WS": ["vehicle velocity data", "wheel speed measurement", "vehicle speed signal"],
    "YR": ["yaw rate measurement", "vehicle rotation rate signal"],
    "ST": ["steering torque measurement", "driver steering effort signal"],
}

DEFECTS = [
    "implausible values",
    "a stuck reading",
    "an offset error",
    "intermittent signal dropouts",
    "excessive measurement noise",
    "a slow signal drift",
    "a delayed update",
    "spurious spikes",
    "an amplification error",
]

REACTIONS = [
    "limit engine torque to the limp-home value",
    "maintain a safe following distance of at least five meters from the vehicle ahead",
    "degrade to a fail-safe cruise mode",
    "inhibit further acceleration requests",
    "fall back to the last plausible value and warn the driver",
    "reduce vehicle speed to a safe level",
    "disable the affected assistance function until the next ignition cycle",
]

MS_VALUES = [20, 50, 100, 150, 200, 250, 500]
PCT_VALUES = [5, 10, 15, 20]

SINGLE_TEMPLATES = [
    "In case of {defect} in the {alias}, the SUT shall {reaction}.",
    "If the {alias} shows {defect} for more than {ms} ms, the system shall {reaction}.",
    "The system shall detect {defect} in the {alias} and {reaction} within {ms} ms.",
    "Upon {defect} affecting the {alias}, the SUT shall {reaction} and record a diagnostic event.",
    "When the {alias} deviates from its redundant channel by more than {pct} percent, the system shall {reaction}.",
]

DOUBLE_TEMPLATES = [
    "In the event of simultaneous faults in the {alias} and the {alias2}, the system shall {reaction}.",
    "If both the {alias} and the {alias2} become unreliable at the same time, the SUT shall {reaction}.",
    "Concurrent {defect} in the {alias} and {defect2} in the {alias2} shall cause the system to {reaction}.",
]

ACTUATORS = ["throttle actuator", "brake actuator"]

ACTUATOR_REACTIONS = [
    "cut the fuel injection and coast down safely",
    "engage the electric parking brake in a controlled ramp",
    "open the clutch and bring the vehicle to a controlled standstill",
    "switch the powertrain to a safe state and engage hazard lights",
]

ACTUATOR_TEMPLATES = [
    "If the {act} does not follow its commanded value within {ms} ms, the system shall {reaction}.",
    "Upon detection of a jammed {act}, the SUT shall {reaction}.",
    "When the {act} reports an internal fault, the system shall {reaction} and notify the driver.",
    "In the event of simultaneous failures in both the throttle and brake actuators, the system shall "
    "activate an emergency deceleration procedure and automatically engage hazard lights (case {ms}).",
    "Loss of feedback from the {act} for more than {ms} ms shall cause the system to {reaction}.",
]

# eval-split sensor gold maps: 71 singles + 26 doubles = 97
SINGLES = [("APP", 25), ("WS", 24), ("YR", 20), ("WSA", 1), ("ST", 1)]
DOUBLES = [
    (("APP", "WSA"), 5),
    (("WS", "ST"), 5),
    (("YR", "WSA"), 4),
    (("APP", "WS"), 6),
    (("YR", "ST"), 6),
]

# pool: (gold_class, gold_locations or None)
POOL = [
    ("sensor", ["APP"]),
    ("actuator", None),
    ("sensor", ["WS"]),
    ("actuator", None),
    ("sensor", ["YR"]),
    ("sensor", ["APP", "WS"]),
    ("sensor", ["ST"]),
    ("sensor", ["WSA"]),
    ("sensor", ["YR", "ST"]),
    ("sensor", ["WS"]),
]


def sensor_text(rng: random.Random, locations: list[str], seen: set[str]) -> str:
    for _ in range(200):
        if len(locations) == 1:
            tpl = rng.choice(SINGLE_TEMPLATES)
            text = tpl.format(
                alias=rng.choice(ALIASES[locations[0]]),
                defect=rng.choice(DEFECTS),
                reaction=rng.choice(REACTIONS),
                ms=rng.choice(MS_VALUES),
                pct=rng.choice(PCT_VALUES),
            )
        else:
            tpl = rng.choice(DOUBLE_TEMPLATES)
            text = tpl.format(
                alias=rng.choice(ALIASES[locations[0]]),
                alias2=rng.choice(ALIASES[locations[1]]),
                defect=rng.choice(DEFECTS),
                defect2=rng.choice(DEFECTS),
                reaction=rng.choice(REACTIONS),
            )
        if text not in seen:
            seen.add(text)
            return text
    raise RuntimeError("could not synthesize a unique sensor FSR text")


def actuator_text(rng: random.Random, seen: set[str]) -> str:
    for _ in range(200):
        tpl = rng.choice(ACTUATOR_TEMPLATES)
        text = tpl.format(
            act=rng.choice(ACTUATORS),
            reaction=rng.choice(ACTUATOR_REACTIONS),
            ms=rng.choice(MS_VALUES),
        )
        if text not in seen:
            seen.add(text)
            return text
    raise RuntimeError("could not synthesize a unique actuator FSR text")


def main() -> int:
    rng = random.Random(SEED)
    seen: set[str] = set()
    records = []

    for i, (klass, locations) in enumerate(POOL, start=1):
        text = sensor_text(rng, locations, seen) if klass == "sensor" else actuator_text(rng, seen)
        rec = {"id": f"pool-{i:02d}", "text": text, "gold_class": klass}
        if locations:
            rec["gold_locations"] = sorted(locations)
        records.append(rec)

    eval_specs: list[tuple[str, list[str] | None]] = []
    for comp, count in SINGLES:
        eval_specs += [("sensor", [comp])] * count
    for pair, count in DOUBLES:
        eval_specs += [("sensor", list(pair))] * count
    eval_specs += [("actuator", None)] * 37
    rng.shuffle(eval_specs)

    for i, (klass, locations) in enumerate(eval_specs, start=1):
        text = sensor_text(rng, locations, seen) if klass == "sensor" else actuator_text(rng, seen)
        rec = {"id": f"fsr-{i:03d}", "text": text, "gold_class": klass}
        if locations:
            rec["gold_locations"] = sorted(locations)
        records.append(rec)

    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")

    negatives = [
        r["id"]
        for r in records
        if r["id"].startswith("fsr-")
        and r.get("gold_locations")
        and set(r["gold_locations"]) <= {"WSA", "ST"}
    ]
    n_sensor = sum(1 for r in records[10:] if r["gold_class"] == "sensor")
    n_act = sum(1 for r in records[10:] if r["gold_class"] == "actuator")
    print(f"wrote {len(records)} FSRs to {OUT}")
    print(f"eval split: {n_sensor} sensor / {n_act} actuator")
    print(f"dropped-sensor negatives: {negatives}")
    assert n_sensor == 97 and n_act == 37 and len(negatives) == 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
