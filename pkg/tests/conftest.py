import re

_CRITERIA = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    if report.when == "call" or report.failed or report.skipped:
        prev = _CRITERIA.get(key, "PASS")
        status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        _CRITERIA[key] = status if prev == "PASS" else prev


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), status in sorted(_CRITERIA.items()):
        terminalreporter.write_line(f"criterion {num:2d} {name:28s} {status}")
