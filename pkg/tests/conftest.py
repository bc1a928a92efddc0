import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("repo", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

# criterion id -> (passed, one-line detail, extra report lines); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str, list[str]]] = {}


@pytest.fixture
def record_criterion():
    def record(cid: int, passed: bool, detail: str, extra: list[str] | None = None) -> None:
        ACCEPTANCE[cid] = (passed, detail, list(extra or []))
        print(f"criterion {cid}: {'PASS' if passed else 'FAIL'}  {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE):
        passed, detail, _ = ACCEPTANCE[cid]
        terminalreporter.write_line(f"criterion {cid}: {'PASS' if passed else 'FAIL'}  {detail}")
    for cid in sorted(ACCEPTANCE):
        extra = ACCEPTANCE[cid][2]
        if extra:
            terminalreporter.write_line(f"criterion {cid} report:")
            for line in extra:
                terminalreporter.write_line("  " + line)
