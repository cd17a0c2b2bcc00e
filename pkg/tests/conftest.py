from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

_acceptance = {}


@pytest.fixture
def record():
    """Store one pass/fail line per acceptance criterion."""
    def _record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _acceptance[number] = line
        print(line)
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_acceptance):
        terminalreporter.write_line(_acceptance[k])
