import pytest

_results: list[tuple[str, str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    label = item.get_closest_marker("criterion")
    if label is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        _results.append((label.args[0], status, detail))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in _results:
        terminalreporter.write_line(f"{status} criterion {name}" + (f": {detail}" if detail else ""))


@pytest.fixture
def detail(record_property):
    """Attach a one-line measurement to the acceptance summary."""

    def note(text):
        record_property("detail", text)
        print(text)

    return note
