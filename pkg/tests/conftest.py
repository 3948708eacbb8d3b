"""Shared test plumbing: acceptance-criterion reporting.

Acceptance tests register one line per criterion; the lines are echoed
in the terminal summary so every run shows the per-criterion verdicts
regardless of output capturing.
"""

CRITERION_RESULTS = []


def record_criterion(number, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    line = f"criterion {number:2d} [{status}] {name}"
    if detail:
        line += f" ({detail})"
    CRITERION_RESULTS.append((number, line))
    return ok


def pytest_terminal_summary(terminalreporter):
    if not CRITERION_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for _, line in sorted(CRITERION_RESULTS):
        terminalreporter.write_line(line)
