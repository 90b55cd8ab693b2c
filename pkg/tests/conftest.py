import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
KB_DIR = ROOT / "kb"
CORPUS = ROOT / "corpus"
sys.path.insert(0, str(Path(__file__).resolve().parent))

# acceptance results, printed once at the end of the run
CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if report.when == "call" or (report.when == "setup" and report.failed):
        CRITERIA[number] = (report.passed, title)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        ok, title = CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}")


@pytest.fixture(scope="session")
def kbs():
    from situate.kb import load_kb
    return {name: load_kb(KB_DIR / name) for name in ("isr", "airtravel", "minimal")}
