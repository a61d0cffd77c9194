"""Scoring of pipeline outputs and trace differencing against golden runs."""

from .metrics import (
    ConfusionCounts,
    MetricsReport,
    accuracy,
    confusion_counts,
    f1_macro,
    f1_per_class,
    pct_round,
)
from .diffing import ChannelFinding, ViolationReport, Verdict, compare_traces, default_thresholds

__all__ = [
    "ConfusionCounts",
    "MetricsReport",
    "accuracy",
    "confusion_counts",
    "f1_macro",
    "f1_per_class",
    "pct_round",
    "ChannelFinding",
    "ViolationReport",
    "Verdict",
    "compare_traces",
    "default_thresholds",
]
