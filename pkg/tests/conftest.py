import re

_RESULTS = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.when == "call" or report.failed:
        prev = _RESULTS.get(n, True)
        _RESULTS[n] = prev and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    from test_acceptance import TITLES
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        status = "PASS" if _RESULTS[n] else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {TITLES.get(n, '')}")
