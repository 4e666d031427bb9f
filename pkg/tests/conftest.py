import os
import shutil
import sys

import pytest

TOY_ENGINE = [sys.executable, "-m", "stratmark.uci.toyengine"]
STOCKFISH = os.environ.get("STRATMARK_TEST_ENGINE") or shutil.which("stockfish")

# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def toy_engine():
    return list(TOY_ENGINE)


@pytest.fixture
def stockfish():
    if not STOCKFISH:
        pytest.skip("no external UCI engine found (set STRATMARK_TEST_ENGINE or put stockfish on PATH)")
    return [STOCKFISH]


@pytest.fixture
def acceptance():
    def record(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
