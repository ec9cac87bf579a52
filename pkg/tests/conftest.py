from __future__ import annotations

import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda c: int(c[1:])):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
