"""Stateful per-sample fault transforms on discrete signal streams.

Each transform realizes one closed-form fault model over a fixed-step
stream: multiplicative gain, additive offset, stuck-at, pure time delay,
additive gaussian noise, Bernoulli packet loss, linear drift and
additive spikes. A transform owns exactly one channel's state and is
fed samples in time order; outside its injection window it is the
identity, bit for bit.

Conventions that the equations leave open (all surfaced as parameters
or documented here):

* Delay pre-history: for t_start <= t < t_start + tau the output holds
  the first in-window healthy value h(t_start); no pre-window data is
  fabricated and the transform stays causal.
* Packet loss: a lost sample is replaced per DropPolicy (literal zero,
  or the last value the channel actually delivered; pass-through
  samples outside the window count as delivered).
* Drift is a linear ramp anchored at window entry: slope * (t - t_start).
* Noise is gaussian with standard deviation sigma; spikes are additive
  with a fixed amplitude at a per-sample Bernoulli rate.
* The random stream advances only on in-window samples (noise: one
  gaussian = two uniforms; packet loss and spike: one uniform each) and
  is fully determined by (params.seed, channel id), see rng module.
"""

from __future__ import annotations

import math
from collections import deque
from typing import NamedTuple

from .model import (
    ChannelFault,
    DelayParams,
    DropPolicy,
    FaultType,
    NoiseParams,
    PacketLossParams,
    SpikeParams,
)
from .rng import SplitMix64, channel_seed

DEFAULT_DT_S = 0.01  # typical CAN signal cadence


class Sample(NamedTuple):
    t: float
    value: float


class FaultTransform:
    """Realization of one channel fault over a fixed-step sample stream.

    Not reentrant: one instance per channel per run, samples in time
    order. ``apply`` is total over valid streams and never raises.
    """

    def __init__(self, fault: ChannelFault, channel_id: str, dt: float = DEFAULT_DT_S):
        if dt <= 0:
            raise ValueError("dt must be > 0")
        self.fault = fault
        self.channel_id = channel_id
        self.dt = dt
        self._window = fault.window
        p = fault.params
        self._rng = None
        if isinstance(p, (NoiseParams, PacketLossParams, SpikeParams)):
            self._rng = SplitMix64(channel_seed(p.seed, channel_id))
        self._history: deque[float] | None = None
        if isinstance(p, DelayParams):
            # number of whole samples of delay; tolerance absorbs float
            # noise in tau/dt so tau = k*dt maps to exactly k
            steps = math.ceil(p.tau_s / dt - 1e-9)
            self._delay_steps = max(0, steps)
            self._history = deque(maxlen=self._delay_steps + 1)
        self._last_delivered: float | None = None

    def apply(self, t: float, value: float) -> float:
        if not self._window.contains(t):
            self._last_delivered = value
            return value
        return self._faulted(t, value)

    def apply_sample(self, s: Sample) -> Sample:
        return Sample(s.t, self.apply(s.t, s.value))

    def _faulted(self, t: float, h: float) -> float:
        p = self.fault.params
        ft = self.fault.fault_type

        if ft is FaultType.GAIN:
            return p.gain * h
        if ft is FaultType.OFFSET:
            return h + p.offset
        if ft is FaultType.STUCK_AT:
            return p.value
        if ft is FaultType.DELAY:
            # deque holds the last delay_steps+1 in-window healthy values;
            # until it fills, its head stays h(t_start) (hold-first)
            self._history.append(h)
            return self._history[0]
        if ft is FaultType.NOISE:
            return h + p.sigma * self._rng.gaussian()
        if ft is FaultType.PACKET_LOSS:
            if self._rng.uniform() < p.delivery_prob:
                self._last_delivered = h
                return h
            if p.drop_policy is DropPolicy.HOLD_LAST and self._last_delivered is not None:
                return self._last_delivered
            return 0.0
        if ft is FaultType.DRIFT:
            return h + p.slope_per_s * (t - self._window.t_start)
        if ft is FaultType.SPIKE:
            if self._rng.uniform() < p.prob:
                return h + p.amplitude
            return h
        raise AssertionError(f"unhandled fault type {ft}")


def make_transform(fault: ChannelFault, channel_id: str, dt: float = DEFAULT_DT_S) -> FaultTransform:
    return FaultTransform(fault, channel_id, dt)


def apply_stream(transform: FaultTransform, samples: list[Sample]) -> list[Sample]:
    """Run a whole stream through one transform (test and tooling helper)."""
    return [transform.apply_sample(s) for s in samples]
