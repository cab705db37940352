import re

_RESULTS = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    if report.when == "call" or report.failed or report.skipped:
        prev = _RESULTS.get(key, "PASS")
        _RESULTS[key] = "FAIL" if (report.failed or prev == "FAIL") else ("SKIP" if report.skipped else prev)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), status in sorted(_RESULTS.items()):
        terminalreporter.write_line(f"{status} criterion {num}: {name}")
