"""Simplified longitudinal vehicle plant and its speed-tracking controller.

The plant is a deliberately small, fully documented stand-in for a
high-fidelity engine/vehicle-dynamics model: a torque map drives
longitudinal dynamics (m dv/dt = F_traction - F_brake - F_drag - F_roll),
engine speed follows vehicle speed through the gear train with an idle
floor, and engine temperature relaxes first-order toward a load-dependent
setpoint. Every constant lives in a versioned plant-config file, so a
trace's plant digest pins the physics it was produced with.

The speed controller closes the loop between sensed bus signals and the
actuator commands, which is what lets a corrupted sensor reading
propagate into system-level misbehavior: it reads the accelerator pedal
channel as a speed demand (pedal fraction times v_max) and tracks it with
a PI law, splitting the control effort into throttle and brake commands.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

G_MPS2 = 9.81

TEMP_MIN_C = -40.0
TEMP_MAX_C = 200.0


@dataclass(frozen=True)
class PlantConfig:
    mass_kg: float = 1500.0
    wheel_radius_m: float = 0.31
    final_drive: float = 3.9
    gear_ratios: tuple[float, ...] = (3.5, 2.1, 1.4, 1.0, 0.8)
    shift_up_mps: tuple[float, ...] = (8.0, 14.0, 20.0, 27.0)
    shift_hysteresis_mps: float = 1.5
    drag_n_per_mps2: float = 0.38
    rolling_coef: float = 0.012
    max_brake_force_n: float = 9000.0
    driveline_efficiency: float = 0.9
    torque_map_rpm: tuple[float, ...] = (800.0, 1500.0, 2500.0, 3500.0, 4500.0, 5500.0, 6500.0)
    torque_map_nm: tuple[float, ...] = (110.0, 165.0, 210.0, 230.0, 215.0, 185.0, 140.0)
    idle_rpm: float = 800.0
    redline_rpm: float = 6500.0
    temp_ambient_c: float = 20.0
    temp_base_c: float = 78.0
    temp_load_gain_c: float = 35.0
    temp_tau_s: float = 45.0
    ctrl_kp: float = 0.30
    ctrl_ki: float = 0.05
    ctrl_v_max_mps: float = 45.0
    ctrl_brake_deadband: float = 0.05
    steer_amplitude_deg: float = 3.0
    steer_period_s: float = 60.0
    steer_torque_nm_per_deg: float = 1.2
    wheelbase_m: float = 2.7

    def __post_init__(self):
        if len(self.torque_map_rpm) != len(self.torque_map_nm):
            raise ValueError("torque map grids must be the same length")
        if len(self.shift_up_mps) != len(self.gear_ratios) - 1:
            raise ValueError("need one shift-up threshold per gear boundary")

    def max_torque_nm(self, rpm: float) -> float:
        """Wide-open-throttle torque at the given engine speed, linear
        interpolation over the map with flat extrapolation."""
        grid, vals = self.torque_map_rpm, self.torque_map_nm
        if rpm <= grid[0]:
            return vals[0]
        if rpm >= grid[-1]:
            return vals[-1]
        for i in range(1, len(grid)):
            if rpm <= grid[i]:
                frac = (rpm - grid[i - 1]) / (grid[i] - grid[i - 1])
                return vals[i - 1] + frac * (vals[i] - vals[i - 1])
        return vals[-1]

    def to_json_obj(self) -> dict:
        obj = {"schema_version": 1}
        for name in self.__dataclass_fields__:
            v = getattr(self, name)
            obj[name] = list(v) if isinstance(v, tuple) else v
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> "PlantConfig":
        kwargs = {}
        for name, f in cls.__dataclass_fields__.items():
            if name in obj:
                v = obj[name]
                kwargs[name] = tuple(v) if isinstance(v, list) else v
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "PlantConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                obj = json.load(fh)
            return cls.from_json_obj(obj)
        except (json.JSONDecodeError, TypeError, ValueError) as exc:
            raise ValueError(f"plant config {path}: {exc}") from None

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_obj(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def digest(self) -> str:
        canonical = json.dumps(self.to_json_obj(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class PlantState:
    engine_speed_rpm: float
    vehicle_speed_mps: float
    engine_torque_nm: float
    engine_temp_c: float
    gear: int


def initial_state(cfg: PlantConfig) -> PlantState:
    return PlantState(
        engine_speed_rpm=cfg.idle_rpm,
        vehicle_speed_mps=0.0,
        engine_torque_nm=0.0,
        engine_temp_c=cfg.temp_ambient_c,
        gear=1,
    )


def engine_rpm_for(cfg: PlantConfig, v_mps: float, gear: int) -> float:
    ratio = cfg.gear_ratios[gear - 1] * cfg.final_drive
    omega_engine = (v_mps / cfg.wheel_radius_m) * ratio  # rad/s
    rpm = omega_engine * 60.0 / (2.0 * math.pi)
    return min(cfg.redline_rpm, max(cfg.idle_rpm, rpm))


def _shift(cfg: PlantConfig, gear: int, v_mps: float) -> int:
    while gear < len(cfg.gear_ratios) and v_mps > cfg.shift_up_mps[gear - 1]:
        gear += 1
    while gear > 1 and v_mps < cfg.shift_up_mps[gear - 2] - cfg.shift_hysteresis_mps:
        gear -= 1
    return gear


def step_plant(state: PlantState, throttle: float, brake: float, dt: float, cfg: PlantConfig) -> PlantState:
    """Advance the plant by one step under clamped pedal commands.

    Deterministic: a pure function of (state, inputs, dt, config).
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    throttle = min(1.0, max(0.0, throttle))
    brake = min(1.0, max(0.0, brake))

    v = state.vehicle_speed_mps
    rpm = engine_rpm_for(cfg, v, state.gear)
    torque = throttle * cfg.max_torque_nm(rpm)

    ratio = cfg.gear_ratios[state.gear - 1] * cfg.final_drive
    f_traction = torque * ratio * cfg.driveline_efficiency / cfg.wheel_radius_m
    f_brake = brake * cfg.max_brake_force_n if v > 0 else 0.0
    f_drag = cfg.drag_n_per_mps2 * v * v
    f_roll = cfg.rolling_coef * cfg.mass_kg * G_MPS2 if v > 0 else 0.0

    dv = dt * (f_traction - f_brake - f_drag - f_roll) / cfg.mass_kg
    v_next = max(0.0, v + dv)
    gear_next = _shift(cfg, state.gear, v_next)

    load = torque / max(cfg.torque_map_nm)
    temp_target = cfg.temp_base_c + cfg.temp_load_gain_c * load
    temp = state.engine_temp_c + dt * (temp_target - state.engine_temp_c) / cfg.temp_tau_s
    temp = min(TEMP_MAX_C, max(TEMP_MIN_C, temp))

    return PlantState(
        engine_speed_rpm=engine_rpm_for(cfg, v_next, gear_next),
        vehicle_speed_mps=v_next,
        engine_torque_nm=torque,
        engine_temp_c=temp,
        gear=gear_next,
    )


class SpeedController:
    """PI speed tracker: sensed pedal fraction -> speed demand -> pedal
    commands. Owns the integrator state for one run."""

    def __init__(self, cfg: PlantConfig):
        self.cfg = cfg
        self._integral = 0.0

    def step(self, app_sensed: float, brake_pedal: float, v_sensed: float, dt: float) -> tuple[float, float]:
        cfg = self.cfg
        target = min(cfg.ctrl_v_max_mps, max(0.0, app_sensed * cfg.ctrl_v_max_mps))
        err = target - v_sensed
        self._integral += err * dt
        # anti-windup: keep the integral contribution within one pedal unit
        limit = 1.0 / cfg.ctrl_ki if cfg.ctrl_ki > 0 else 0.0
        if limit:
            self._integral = min(limit, max(-limit, self._integral))
        u = cfg.ctrl_kp * err + cfg.ctrl_ki * self._integral
        throttle = min(1.0, max(0.0, u))
        brake_auto = min(1.0, max(0.0, -u - cfg.ctrl_brake_deadband))
        brake = min(1.0, max(0.0, brake_pedal + brake_auto))
        return throttle, brake


def steering_angle_deg(cfg: PlantConfig, t: float) -> float:
    """Deterministic steering profile (the lateral channels have no
    longitudinal dynamics to drive them, but must exist on the bus)."""
    return cfg.steer_amplitude_deg * math.sin(2.0 * math.pi * t / cfg.steer_period_s)


def yaw_rate_deg_s(cfg: PlantConfig, v_mps: float, steer_deg: float) -> float:
    """Kinematic single-track yaw rate from speed and steering angle."""
    return math.degrees(v_mps * math.tan(math.radians(steer_deg)) / cfg.wheelbase_m)
