"""Golden-run differencing: deviation detection per bus channel.

A channel violates when its absolute deviation from the golden trace
exceeds its threshold anywhere in the analysis horizon; otherwise the
fault was mitigated on that channel. Default thresholds are a fraction
of each channel's golden-run dynamic range, since an acceptable
deviation on a 6000 rpm signal is not an acceptable deviation on a
pedal fraction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Optional

from ..errors import TimeBaseMismatch
from ..sim.trace import Trace

DEFAULT_THRESHOLD_FRACTION = 0.05


class Verdict(enum.Enum):
    VIOLATED = "violated"
    MITIGATED = "mitigated"


@dataclass(frozen=True)
class ChannelFinding:
    channel: str
    threshold: float
    max_abs_deviation: float
    first_exceed_t: Optional[float]
    verdict: Verdict

    def to_json_obj(self) -> dict:
        return {
            "channel": self.channel,
            "threshold": self.threshold,
            "max_abs_deviation": self.max_abs_deviation,
            "first_exceed_t": self.first_exceed_t,
            "verdict": self.verdict.value,
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "ChannelFinding":
        return cls(
            channel=obj["channel"],
            threshold=float(obj["threshold"]),
            max_abs_deviation=float(obj["max_abs_deviation"]),
            first_exceed_t=None if obj.get("first_exceed_t") is None else float(obj["first_exceed_t"]),
            verdict=Verdict(obj["verdict"]),
        )


@dataclass(frozen=True)
class ViolationReport:
    tc_ids: tuple[str, ...]
    findings: tuple[ChannelFinding, ...]
    summary: str

    @property
    def violated(self) -> tuple[ChannelFinding, ...]:
        return tuple(f for f in self.findings if f.verdict is Verdict.VIOLATED)

    def to_json_obj(self) -> dict:
        return {
            "schema_version": 1,
            "tc_ids": list(self.tc_ids),
            "findings": [f.to_json_obj() for f in self.findings],
            "summary": self.summary,
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "ViolationReport":
        return cls(
            tc_ids=tuple(obj.get("tc_ids", [])),
            findings=tuple(ChannelFinding.from_json_obj(f) for f in obj.get("findings", [])),
            summary=obj.get("summary", ""),
        )

    def to_markdown(self) -> str:
        lines = ["# Fault effect report", ""]
        lines.append(f"Test cases: {', '.join(self.tc_ids) if self.tc_ids else '(none)'}")
        lines.append("")
        lines.append(self.summary)
        lines.append("")
        lines.append("| channel | verdict | max abs deviation | threshold | first exceed [s] |")
        lines.append("|---|---|---|---|---|")
        for f in self.findings:
            first = "-" if f.first_exceed_t is None else format(f.first_exceed_t, ".9g")
            lines.append(
                f"| {f.channel} | {f.verdict.value} | {format(f.max_abs_deviation, '.9g')}"
                f" | {format(f.threshold, '.9g')} | {first} |"
            )
        lines.append("")
        return "\n".join(lines)


def default_thresholds(golden: Trace, fraction: float = DEFAULT_THRESHOLD_FRACTION) -> dict[str, float]:
    """Per-channel threshold: fraction of the golden dynamic range."""
    out = {}
    for name in golden.signal_names:
        series = golden.channels[name]
        if series:
            out[name] = fraction * (max(series) - min(series))
        else:
            out[name] = 0.0
    return out


def compare_traces(golden: Trace, faulty: Trace, thresholds: Mapping[str, float]) -> ViolationReport:
    """Diff a faulty run against its golden baseline, per channel.

    Shadow (pre-interposition) channels never enter the verdict. Raises
    TimeBaseMismatch when the two traces disagree on times or channels.
    """
    if golden.times != faulty.times:
        raise TimeBaseMismatch(
            f"time bases differ: {golden.steps} steps vs {faulty.steps} steps or unequal stamps"
        )
    g_names = set(golden.signal_names)
    f_names = set(faulty.signal_names)
    if g_names != f_names:
        raise TimeBaseMismatch(f"channel sets differ: {sorted(g_names ^ f_names)}")

    findings = []
    for name in golden.signal_names:
        g = golden.channels[name]
        f = faulty.channels[name]
        threshold = thresholds.get(name, 0.0)
        max_dev = 0.0
        first_exceed = None
        for t, gv, fv in zip(golden.times, g, f):
            dev = abs(fv - gv)
            if dev > max_dev:
                max_dev = dev
            if first_exceed is None and dev > threshold:
                first_exceed = t
        verdict = Verdict.VIOLATED if max_dev > threshold else Verdict.MITIGATED
        findings.append(
            ChannelFinding(
                channel=name,
                threshold=threshold,
                max_abs_deviation=max_dev,
                first_exceed_t=first_exceed,
                verdict=verdict,
            )
        )

    n_violated = sum(1 for f in findings if f.verdict is Verdict.VIOLATED)
    if n_violated:
        earliest = min(
            (f for f in findings if f.first_exceed_t is not None),
            key=lambda f: f.first_exceed_t,
        )
        summary = (
            f"{n_violated} of {len(findings)} channels exceeded their deviation threshold; "
            f"earliest at t={format(earliest.first_exceed_t, '.9g')} s on {earliest.channel}."
        )
    else:
        summary = f"All {len(findings)} channels stayed within their deviation thresholds."
    return ViolationReport(tc_ids=faulty.tc_ids, findings=tuple(findings), summary=summary)
