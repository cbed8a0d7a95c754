import pytest


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            if getattr(report, "when", "call") != "call":
                continue
            if "test_acceptance.py" not in str(getattr(report, "nodeid", "")):
                continue
            name = report.nodeid.split("::")[-1]
            verdict = "PASS" if outcome == "passed" else "FAIL"
            lines.append(f"ACCEPTANCE {name}: {verdict}")
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(set(lines)):
            terminalreporter.write_line(line)
