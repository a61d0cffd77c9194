"""Terminal summary for the acceptance suite: one line per criterion."""

from __future__ import annotations

CRITERIA = {
    "test_c01": "fault-model closed-form equivalence",
    "test_c02": "stochastic fault statistics",
    "test_c03": "test-case contract property suite",
    "test_c04": "metric oracle equivalence",
    "test_c05": "fixture-anchored table reproduction",
    "test_c06": "dropped-sensor behavior",
    "test_c07": "failure-mode scoring",
    "test_c08": "end-to-end injection effect",
    "test_c09": "concurrent-fault execution",
    "test_c10": "pacing contract",
    "test_c11": "live-provider run (optional)",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = []
    for status, label in (("passed", "PASS"), ("failed", "FAIL"), ("skipped", "SKIP")):
        for rep in terminalreporter.stats.get(status, []):
            if "test_acceptance" not in rep.nodeid:
                continue
            name = rep.nodeid.split("::")[-1]
            for prefix, title in CRITERIA.items():
                if name.startswith(prefix):
                    rows.append((prefix, title, label))
                    break
    if rows:
        terminalreporter.section("acceptance criteria")
        for prefix, title, label in sorted(rows):
            terminalreporter.write_line(f"{label}  {prefix[5:]}  {title}")
