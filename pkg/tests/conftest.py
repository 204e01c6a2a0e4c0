from __future__ import annotations

from collections import OrderedDict

import pytest

# criterion id -> [title, list of (test name, passed, seconds)]
# runtime budgets are asserted inside the tests, around the code under test
_RESULTS: OrderedDict[str, list] = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(cid, title): acceptance criterion this test checks")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    cid, title = marker.args
    entry = _RESULTS.setdefault(cid, [title, []])
    entry[1].append((item.name, report.passed, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid, (title, parts) in sorted(_RESULTS.items(), key=lambda kv: int(kv[0][1:])):
        ok = all(passed for _, passed, _ in parts)
        seconds = sum(d for _, _, d in parts)
        failed = [name for name, passed, _ in parts if not passed]
        detail = f"  (failed: {', '.join(failed)})" if failed else ""
        tr.write_line(f"[{'PASS' if ok else 'FAIL'}] {cid} {title} [wall {seconds:.2f}s incl. oracles]{detail}")
