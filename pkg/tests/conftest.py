import pytest

_VERDICTS: dict[int, tuple[bool, str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        number, title = mark.args
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "measured")
        _VERDICTS[number] = (rep.passed, title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        ok, title, detail = _VERDICTS[number]
        line = f"ACCEPTANCE criterion {number}: {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f" [{detail}]"
        terminalreporter.write_line(line)
