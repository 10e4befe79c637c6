"""Collects one PASS/FAIL verdict per acceptance criterion and prints them at the end."""

import contextlib

import pytest

VERDICTS: dict = {}


@pytest.fixture
def criterion():
    @contextlib.contextmanager
    def _criterion(number: int, title: str):
        info = {}
        try:
            yield info
        except BaseException:
            VERDICTS[number] = (False, title, info)
            raise
        VERDICTS[number] = (True, title, info)

    return _criterion


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(VERDICTS):
        ok, title, info = VERDICTS[number]
        detail = ", ".join(f"{k}={v}" for k, v in info.items())
        terminalreporter.write_line(
            f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else ""))
