"""Suite-wide configuration: the acceptance-criteria summary table.

Tests marked @pytest.mark.criterion(num, title) get one PASS/FAIL line each
at the end of the run, so the contract checks are readable at a glance even
inside a large -v listing.
"""

import pytest

_results = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(num, title): numbered acceptance check, one line in the "
        "end-of-run summary",
    )


# several tests may share one criterion number; the row reports the worst
_RANK = {"passed": 0, "skipped": 1, "failed": 2}


def _record(num, title, outcome):
    if num in _results:
        old_title, old_outcome = _results[num]
        if _RANK.get(outcome, 2) <= _RANK.get(old_outcome, 2):
            return
    _results[num] = (title, outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    num, title = mark.args
    if rep.when == "call":
        _record(num, title, rep.outcome)
    elif rep.when == "setup" and rep.outcome != "passed":
        # setup errors and skips would otherwise leave the row missing
        _record(num, title, rep.outcome)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _results:
        return
    words = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}
    terminalreporter.section("acceptance criteria")
    for num in sorted(_results):
        title, outcome = _results[num]
        terminalreporter.write_line(
            f"  criterion {num} ({title}): {words.get(outcome, outcome.upper())}"
        )
