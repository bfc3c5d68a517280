"""Shared pytest wiring.

Collects the outcome of each acceptance test (tests/test_acceptance.py,
functions named ``test_cNN_<slug>``) and prints one ``ACCEPTANCE NN <slug>:
PASS/FAIL`` line per criterion in the terminal summary, where pytest's
output capture cannot swallow it.  Criterion 11 includes the whole-session
wall time against its 10-minute budget.
"""

import re
import time

_PATTERN = re.compile(r"test_acceptance\.py::test_c(\d{2})_([a-z0-9_]+)")
_results: dict[int, tuple[str, bool]] = {}
_session_start = time.monotonic()


def pytest_sessionstart(session):
    global _session_start
    _session_start = time.monotonic()


def pytest_runtest_logreport(report):
    match = _PATTERN.search(report.nodeid)
    if not match:
        return
    num, slug = int(match.group(1)), match.group(2)
    if report.when == "call" or (report.when != "call" and report.outcome == "failed"):
        ok = report.outcome == "passed"
        prev = _results.get(num)
        _results[num] = (slug, ok if prev is None else prev[1] and ok)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _results:
        return
    elapsed = time.monotonic() - _session_start
    terminalreporter.section("acceptance criteria")
    for num in sorted(_results):
        slug, ok = _results[num]
        note = ""
        if num == 11:
            ok = ok and elapsed < 600.0
            note = f" (suite wall time {elapsed:.0f}s, budget 600s)"
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"ACCEPTANCE {num:02d} {slug.replace('_', '-')}: {status}{note}")
