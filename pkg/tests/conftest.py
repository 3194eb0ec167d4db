"""Per-criterion pass/fail summary for the acceptance suite."""

import re
from collections import defaultdict

_CRITERIA = defaultdict(list)
_PATTERN = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_")


def pytest_runtest_logreport(report):
    match = _PATTERN.search(report.nodeid)
    if not match:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _CRITERIA[int(match.group(1))].append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        results = _CRITERIA[number]
        failed = [name for name, outcome in results if outcome == "failed"]
        skipped = all(outcome == "skipped" for _, outcome in results)
        status = "SKIP" if skipped else ("FAIL" if failed else "PASS")
        line = f"{status} criterion {number:2d} ({len(results)} test(s))"
        if failed:
            line += ": failing " + ", ".join(failed)
        terminalreporter.write_line(line)
