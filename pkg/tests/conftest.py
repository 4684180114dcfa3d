import json
from pathlib import Path

import pytest

GOLDEN_DIR = Path(__file__).parent / "golden"


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, text): acceptance criterion")
    config._criteria = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        detail = "; ".join(str(v) for k, v in rep.user_properties if k == "measured")
        item.config._criteria.append((mark.args[0], mark.args[1], rep.outcome, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = getattr(config, "_criteria", [])
    if not rows:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for cid, text, outcome, detail in rows:
        verdict = "PASS" if outcome == "passed" else "FAIL"
        line = f"criterion {cid:<4} {verdict}  {text}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def derived():
    """Frozen outputs of the independent oracles in tests/oracles.py."""
    return json.loads((GOLDEN_DIR / "derived.json").read_text())
