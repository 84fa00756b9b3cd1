import re
from collections import defaultdict

CRITERIA = {
    1: "reference-state exactness",
    2: "redistribution maps the 5-qubit reference onto its swapped form",
    3: "determinism at N=5",
    4: "determinism at N=6",
    5: "generalization N=7..10",
    6: "closed-form audit pinned",
    7: "transfer-map completeness",
    8: "branch probabilities independent of the secret",
    9: "security scan pinned",
    10: "engine property suite",
}

_results: dict[int, list[str]] = defaultdict(list)


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_", report.nodeid)
    if not m:
        return
    if report.when == "call" or report.outcome != "passed":
        _results[int(m.group(1))].append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for k, label in CRITERIA.items():
        outcomes = _results.get(k)
        if not outcomes:
            status = "NOT RUN"
        elif all(o == "passed" for o in outcomes):
            status = "PASS"
        else:
            status = "FAIL"
        terminalreporter.write_line(f"criterion {k:2d}: {status}  {label}")
