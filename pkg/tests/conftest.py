import pytest

_VERDICTS = []


class Verdict:
    """Prints one PASS/FAIL line per criterion and keeps it for the closing summary."""

    def __init__(self, capsys):
        self.capsys = capsys

    def __call__(self, number: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} #{number}: {detail}"
        _VERDICTS.append((number, line))
        with self.capsys.disabled():
            print("\n" + line)
        return ok


@pytest.fixture
def verdict(capsys):
    return Verdict(capsys)


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_VERDICTS):
            terminalreporter.write_line(line)
