import pytest

from nora.config import build_config


def make_cfg(**overrides):
    """Default parameters with keyword overrides (traffic-model preset applied first)."""
    return build_config(overrides=overrides)


@pytest.fixture
def cfg():
    return make_cfg


ACCEPTANCE_LINES = {}


def record_acceptance(number: int, title: str, ok: bool, detail: str) -> str:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} | {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
