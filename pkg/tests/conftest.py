"""Collects tests marked ``criterion`` and prints one PASS/FAIL line for each at the end of the run."""
import pytest

_verdicts = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion, reported in the terminal summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    # a failing setup (e.g. a training fixture) fails the criterion too
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
        verdict = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        _verdicts.append((marker.args[0], verdict, detail))


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict, detail in _verdicts:
        line = f"{verdict}  {name}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
    passed = sum(v == "PASS" for _, v, _ in _verdicts)
    terminalreporter.write_line(f"{passed}/{len(_verdicts)} criteria passed")
