import pytest

_ACCEPTANCE: dict = {}


class _Recorder:
    def __call__(self, number: int, title: str, passed: bool, detail: str) -> None:
        _ACCEPTANCE[number] = (title, bool(passed), detail)
        print(f"[criterion {number:2d}] {'PASS' if passed else 'FAIL'} {title}: {detail}")


@pytest.fixture
def acceptance():
    """Record one pass/fail line for an acceptance criterion."""
    return _Recorder()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, passed, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}")
