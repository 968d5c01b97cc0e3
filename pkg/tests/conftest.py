"""Shared pytest plumbing.

The acceptance suite registers one verdict per criterion here; the hook
below prints them as a single summary block, one pass/fail line each, at
the end of the run.
"""
_criterion_lines: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    _criterion_lines[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criterion_lines:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criterion_lines):
        passed, detail = _criterion_lines[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {detail}")
