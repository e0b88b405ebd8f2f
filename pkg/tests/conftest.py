"""Shared pytest configuration: echo acceptance verdicts in the terminal summary."""

ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].lstrip("#"))):
        terminalreporter.write_line(line)
