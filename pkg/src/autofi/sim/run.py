"""Closed-loop simulation runs with black-box fault interposition.

One run executes a strict per-step pipeline: plant sensors publish onto
the virtual bus, per-channel fault transforms interpose, the speed
controller consumes the (possibly corrupted) sensor values, actuator
commands pass through their own transforms, and only then does the
plant integrate. The plant itself never sees fault parameters: faults
exist purely on the bus, which is what keeps the system under test a
black box.

Every faulted channel is recorded twice: post-interposition under its
own name (what consumers saw) and pre-interposition under
``<name>__pre`` (the counterfactual, so effect analysis does not need a
second run).
"""

from __future__ import annotations

import hashlib
import json
import time as _time
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..errors import ConcurrencyBoundExceeded, UnknownChannel
from ..faults import FaultTransform
from ..model import MAX_CONCURRENT_LOCATIONS, FaultTestCase
from .cycle import DrivingCycle
from .plant import (
    PlantConfig,
    SpeedController,
    initial_state,
    step_plant,
    steering_angle_deg,
    yaw_rate_deg_s,
)
from .trace import FAULTY, GOLDEN, SHADOW_SUFFIX, Trace

SENSOR_CHANNELS = ("APP", "WSA", "WS", "YR", "ST", "RPM")
ACTUATOR_CHANNELS = ("THR", "BRK")
TELEMETRY_CHANNELS = ("VSPD", "TRQ", "TEMP")
BUS_CHANNELS = SENSOR_CHANNELS + ACTUATOR_CHANNELS


@dataclass(frozen=True)
class PaceMode:
    """AsFastAsPossible (rate None) or WallClock at sim/real ``rate``."""

    rate: float | None = None

    def __post_init__(self):
        if self.rate is not None and self.rate <= 0:
            raise ValueError("pace rate must be > 0")

    @classmethod
    def as_fast_as_possible(cls) -> "PaceMode":
        return cls(rate=None)

    @classmethod
    def wall_clock(cls, rate: float = 1.0) -> "PaceMode":
        return cls(rate=rate)

    @classmethod
    def parse(cls, text: str) -> "PaceMode":
        text = text.strip().lower()
        if text in ("afap", "fast"):
            return cls.as_fast_as_possible()
        if text.startswith("wall"):
            _, _, rate = text.partition(":")
            return cls.wall_clock(float(rate) if rate else 1.0)
        raise ValueError(f"unknown pace mode: {text!r} (use 'afap' or 'wall[:rate]')")


class Pacer:
    """Sleeps a run so simulated time advances at rate x real time.

    Targets are absolute (start + sim_elapsed/rate), so small sleep
    overshoots self-correct instead of accumulating. Pacing never
    touches computed values.
    """

    _MIN_SLEEP_S = 0.0015

    def __init__(self, mode: PaceMode):
        self.mode = mode
        self._t0 = None

    def start(self) -> None:
        self._t0 = _time.perf_counter()

    def sync(self, sim_elapsed: float) -> None:
        if self.mode.rate is None:
            return
        if self._t0 is None:
            self.start()
        target = self._t0 + sim_elapsed / self.mode.rate
        delay = target - _time.perf_counter()
        if delay > self._MIN_SLEEP_S:
            _time.sleep(delay)


def fault_config_digest(tcs: Sequence[FaultTestCase]) -> str:
    if not tcs:
        return ""
    canonical = json.dumps([tc.to_json_obj() for tc in tcs], sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _check_concurrency(tcs: Sequence[FaultTestCase]) -> None:
    """At most MAX_CONCURRENT_LOCATIONS fault locations may be live at
    any instant across all test cases of the run."""
    events: list[tuple[float, int]] = []
    for tc in tcs:
        for _, cf in tc.faults:
            events.append((cf.window.t_start, 1))
            events.append((cf.window.t_end, -1))
    # windows are half-open: an end at t releases before a start at t
    events.sort(key=lambda e: (e[0], e[1]))
    active = 0
    for _, delta in events:
        active += delta
        if active > MAX_CONCURRENT_LOCATIONS:
            raise ConcurrencyBoundExceeded(
                f"{active} fault locations active at once (bound {MAX_CONCURRENT_LOCATIONS})"
            )


def _build_transforms(tcs: Sequence[FaultTestCase], dt: float) -> dict[str, list[FaultTransform]]:
    transforms: dict[str, list[FaultTransform]] = {}
    for tc in tcs:
        for channel, cf in tc.faults:
            if channel not in BUS_CHANNELS:
                raise UnknownChannel(channel)
            transforms.setdefault(channel, []).append(FaultTransform(cf, channel, dt))
    return transforms


def _interpose(transforms: dict[str, list[FaultTransform]], channel: str, t: float, value: float) -> float:
    for tr in transforms.get(channel, ()):
        value = tr.apply(t, value)
    return value


def _simulate(
    cycle: DrivingCycle,
    cfg: PlantConfig,
    tcs: Sequence[FaultTestCase],
    pace: PaceMode,
) -> Trace:
    transforms = _build_transforms(tcs, cycle.dt)
    faulted = [ch for ch in BUS_CHANNELS if ch in transforms]

    names = list(SENSOR_CHANNELS + ACTUATOR_CHANNELS + TELEMETRY_CHANNELS)
    names += [ch + SHADOW_SUFFIX for ch in faulted]
    data: dict[str, list[float]] = {n: [] for n in names}
    times: list[float] = []

    controller = SpeedController(cfg)
    state = initial_state(cfg)
    dt = cycle.dt
    pacer = Pacer(pace)
    pacer.start()

    for k in range(cycle.steps):
        t = cycle.time(k)
        app_driver, brake_driver = cycle.app[k], cycle.brake[k]
        steer = steering_angle_deg(cfg, t)

        truth = {
            "APP": app_driver,
            "WSA": steer,
            "WS": state.vehicle_speed_mps,
            "YR": yaw_rate_deg_s(cfg, state.vehicle_speed_mps, steer),
            "ST": cfg.steer_torque_nm_per_deg * steer,
            "RPM": state.engine_speed_rpm,
        }
        sensed = {ch: _interpose(transforms, ch, t, v) for ch, v in truth.items()}

        throttle, brake = controller.step(sensed["APP"], brake_driver, sensed["WS"], dt)
        command_truth = {"THR": throttle, "BRK": brake}
        command = {ch: _interpose(transforms, ch, t, v) for ch, v in command_truth.items()}

        times.append(t)
        for ch in SENSOR_CHANNELS:
            data[ch].append(sensed[ch])
        for ch in ACTUATOR_CHANNELS:
            data[ch].append(command[ch])
        data["VSPD"].append(state.vehicle_speed_mps)
        data["TRQ"].append(state.engine_torque_nm)
        data["TEMP"].append(state.engine_temp_c)
        for ch in faulted:
            pre = truth[ch] if ch in truth else command_truth[ch]
            data[ch + SHADOW_SUFFIX].append(pre)

        state = step_plant(state, command["THR"], command["BRK"], dt, cfg)
        pacer.sync((k + 1) * dt)

    return Trace(
        kind=FAULTY if tcs else GOLDEN,
        dt=dt,
        times=tuple(times),
        channels={n: tuple(v) for n, v in data.items()},
        tc_ids=tuple(tc.id for tc in tcs),
        cycle_digest=cycle.digest(),
        plant_digest=cfg.digest(),
        fault_digest=fault_config_digest(tcs),
    )


def run_golden(cycle: DrivingCycle, cfg: PlantConfig, pace: PaceMode | None = None) -> Trace:
    """Fault-free reference run; a pure function of (cycle, config)."""
    return _simulate(cycle, cfg, (), pace or PaceMode.as_fast_as_possible())


def run_with_faults(
    cycle: DrivingCycle,
    cfg: PlantConfig,
    tcs: Iterable[FaultTestCase],
    pace: PaceMode | None = None,
) -> Trace:
    """Run with the given test cases interposed on their bus channels.

    Raises UnknownChannel for a location the bus does not publish and
    ConcurrencyBoundExceeded when three or more locations would be
    active at the same instant. With no test cases this reproduces
    run_golden exactly.
    """
    tcs = tuple(tcs)
    _check_concurrency(tcs)
    return _simulate(cycle, cfg, tcs, pace or PaceMode.as_fast_as_possible())
