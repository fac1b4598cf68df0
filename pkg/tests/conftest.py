"""Collects one verdict per acceptance criterion and prints them at the end."""

import pytest

_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    def record(num: int, ok: bool, detail: str = "") -> bool:
        _RESULTS[num] = (bool(ok), detail)
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_RESULTS):
        ok, detail = _RESULTS[num]
        terminalreporter.write_line(f"criterion {num:02d}: {'PASS' if ok else 'FAIL'}  {detail}")
