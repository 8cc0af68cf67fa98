import pytest

# (criterion number, description, passed, detail) collected by the acceptance tests
ACCEPTANCE_LINES: list[tuple[int, str, bool, str]] = []


@pytest.fixture
def acceptance():
    """Record and print one pass/fail line for an acceptance criterion."""

    def record(number: int, name: str, ok: bool, detail: str = "") -> bool:
        ACCEPTANCE_LINES.append((number, name, bool(ok), detail))
        print(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name} {detail}")
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, ok, detail in sorted(ACCEPTANCE_LINES, key=lambda x: x[0]):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {name} {detail}")
