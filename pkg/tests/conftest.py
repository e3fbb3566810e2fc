import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_criteria: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        _criteria.setdefault(marker.args[0], []).append((item.name, report.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        results = _criteria[n]
        passed = sum(ok for _, ok, _ in results)
        status = "PASS" if passed == len(results) else "FAIL"
        notes = " | ".join(f"{name}: {'ok' if ok else 'failed'}" + (f" ({d})" if d else "")
                           for name, ok, d in results)
        terminalreporter.write_line(f"criterion {n}: {status} {passed}/{len(results)}  {notes}")
