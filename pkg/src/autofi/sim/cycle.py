"""Driving cycles: the pedal schedule that drives a simulation run.

A cycle is a fixed-step sequence of driver pedal positions. The default
synthetic cycle is 400 s of repeating urban-style maneuvers (launch,
cruise, coast, brake, stop) so that there is pedal activity in any
injection window an experiment is likely to use.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass


def _fmt(x: float) -> str:
    return format(x, ".9g")


@dataclass(frozen=True)
class DrivingCycle:
    """Fixed-step pedal schedule; arrays are index-aligned per step."""

    dt: float
    app: tuple[float, ...]
    brake: tuple[float, ...]

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if len(self.app) != len(self.brake):
            raise ValueError("app and brake must have the same length")
        for name, series in (("app", self.app), ("brake", self.brake)):
            if any(not 0.0 <= v <= 1.0 for v in series):
                raise ValueError(f"{name} pedal values must be within [0, 1]")

    @property
    def steps(self) -> int:
        return len(self.app)

    @property
    def duration(self) -> float:
        return self.steps * self.dt

    def time(self, k: int) -> float:
        return k * self.dt

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t_s", "app", "brake"])
        for k in range(self.steps):
            writer.writerow([_fmt(self.time(k)), _fmt(self.app[k]), _fmt(self.brake[k])])
        return buf.getvalue()

    def digest(self) -> str:
        return hashlib.sha256(self.to_csv().encode("utf-8")).hexdigest()

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def load(cls, path) -> "DrivingCycle":
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header[:3]] != ["t_s", "app", "brake"]:
                raise ValueError("cycle file must start with header t_s,app,brake")
            times: list[float] = []
            app: list[float] = []
            brake: list[float] = []
            for row in reader:
                if not row:
                    continue
                times.append(float(row[0]))
                app.append(float(row[1]))
                brake.append(float(row[2]))
        if not times:
            raise ValueError("cycle file has no rows")
        if len(times) == 1:
            raise ValueError("cycle file needs at least two rows to infer the step")
        dt = times[1] - times[0]
        for i in range(1, len(times)):
            if abs(times[i] - i * dt) > 1e-6:
                raise ValueError(f"cycle time base is not a fixed step at row {i}")
        return cls(dt=dt, app=tuple(app), brake=tuple(brake))


# One repeating block of the default cycle: (seconds, app, brake).
_DEFAULT_BLOCK = (
    (5.0, 0.00, 0.00),
    (15.0, 0.55, 0.00),
    (10.0, 0.30, 0.00),
    (10.0, 0.06, 0.00),
    (8.0, 0.00, 0.45),
    (2.0, 0.00, 0.00),
)


def default_cycle(duration_s: float = 400.0, dt: float = 0.01) -> DrivingCycle:
    """Synthetic urban-style cycle with a small per-block pedal variation
    so consecutive blocks are not identical."""
    steps = round(duration_s / dt)
    block_len = sum(seg[0] for seg in _DEFAULT_BLOCK)
    app: list[float] = []
    brake: list[float] = []
    for k in range(steps):
        t = k * dt
        block = int(t // block_len)
        t_in = t - block * block_len
        a, b = 0.0, 0.0
        acc = 0.0
        for seg_len, seg_app, seg_brake in _DEFAULT_BLOCK:
            acc += seg_len
            if t_in < acc:
                a, b = seg_app, seg_brake
                break
        if a > 0:
            a = min(1.0, max(0.0, a + 0.05 * ((block % 3) - 1)))
        app.append(a)
        brake.append(b)
    return DrivingCycle(dt=dt, app=tuple(app), brake=tuple(brake))
