"""Shared pytest wiring.

The acceptance tests register one verdict line per criterion via
``record_acceptance_line``; the hook below prints them in a dedicated
terminal section at the end of the run, where output capture cannot
swallow them.
"""

_acceptance_lines: list[str] = []


def record_acceptance_line(line: str) -> None:
    _acceptance_lines.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines):
            terminalreporter.write_line(line)
