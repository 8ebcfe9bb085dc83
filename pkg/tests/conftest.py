import pytest

_RESULTS = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        number, text = marker.args
        detail = getattr(item, "criterion_detail", "")
        _RESULTS.append((number, text, rep.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, text, outcome, detail in sorted(_RESULTS, key=lambda r: r[0]):
        flag = "PASS" if outcome == "passed" else "FAIL"
        line = f"[{flag}] criterion {number:>2}: {text}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
