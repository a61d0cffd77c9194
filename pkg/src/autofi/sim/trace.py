"""Time-indexed record of all bus channels for one run.

A trace is immutable once a run completes. The sidecar metadata carries
digests of the driving cycle, plant config and fault configuration, so a
trace is self-describing: a faulty run can refuse to be compared against
a golden trace produced from different inputs.

On disk a trace is a CSV (header ``t_s,<channel>,...``, one row per
step, 9 significant digits) plus a ``.meta.json`` sidecar. Channels
named ``<id>__pre`` are shadow copies of a faulted channel before
interposition; they exist for counterfactual analysis and are excluded
from golden/faulty comparisons.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

SHADOW_SUFFIX = "__pre"

GOLDEN = "golden"
FAULTY = "faulty"


def _fmt(x: float) -> str:
    return format(x, ".9g")


@dataclass(frozen=True)
class Trace:
    kind: str
    dt: float
    times: tuple[float, ...]
    channels: Mapping[str, tuple[float, ...]]
    tc_ids: tuple[str, ...] = ()
    cycle_digest: str = ""
    plant_digest: str = ""
    fault_digest: str = ""

    def __post_init__(self):
        for name, series in self.channels.items():
            if len(series) != len(self.times):
                raise ValueError(f"channel {name}: {len(series)} samples vs {len(self.times)} times")

    @property
    def steps(self) -> int:
        return len(self.times)

    @property
    def channel_names(self) -> tuple[str, ...]:
        return tuple(self.channels.keys())

    @property
    def signal_names(self) -> tuple[str, ...]:
        """Channel names without the shadow (pre-interposition) copies."""
        return tuple(n for n in self.channels if not n.endswith(SHADOW_SUFFIX))

    @property
    def run_id(self) -> str:
        tag = "|".join([self.kind, self.cycle_digest, self.plant_digest, self.fault_digest])
        return hashlib.sha256(tag.encode("utf-8")).hexdigest()[:12]

    def to_meta_obj(self) -> dict:
        return {
            "schema_version": 1,
            "run_id": self.run_id,
            "kind": self.kind,
            "tc_ids": list(self.tc_ids),
            "dt_s": self.dt,
            "steps": self.steps,
            "channels": list(self.channels.keys()),
            "cycle_digest": self.cycle_digest,
            "plant_digest": self.plant_digest,
            "fault_digest": self.fault_digest,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        names = list(self.channels.keys())
        writer.writerow(["t_s"] + names)
        columns = [self.channels[n] for n in names]
        for i, t in enumerate(self.times):
            writer.writerow([_fmt(t)] + [_fmt(col[i]) for col in columns])
        return buf.getvalue()


def meta_path_for(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".meta.json")


def save_trace(trace: Trace, csv_path) -> None:
    csv_path = Path(csv_path)
    csv_path.write_text(trace.to_csv(), encoding="utf-8")
    meta_path_for(csv_path).write_text(
        json.dumps(trace.to_meta_obj(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_trace(csv_path) -> Trace:
    csv_path = Path(csv_path)
    meta = json.loads(meta_path_for(csv_path).read_text(encoding="utf-8"))
    with open(csv_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        names = header[1:]
        times: list[float] = []
        columns: list[list[float]] = [[] for _ in names]
        for row in reader:
            if not row:
                continue
            times.append(float(row[0]))
            for j, cell in enumerate(row[1:]):
                columns[j].append(float(cell))
    return Trace(
        kind=meta["kind"],
        dt=float(meta["dt_s"]),
        times=tuple(times),
        channels={n: tuple(col) for n, col in zip(names, columns)},
        tc_ids=tuple(meta.get("tc_ids", [])),
        cycle_digest=meta.get("cycle_digest", ""),
        plant_digest=meta.get("plant_digest", ""),
        fault_digest=meta.get("fault_digest", ""),
    )
