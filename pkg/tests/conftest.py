import pytest

from adept.gateway import BudgetLedger, Gateway, MockBackend
from adept.guest_profile import default_profile
from adept.prompt_library import TemplateLibrary


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion."""
    lines = []
    for status in ("passed", "failed", "skipped"):
        for rep in terminalreporter.stats.get(status, []):
            if "test_acceptance" not in rep.nodeid:
                continue
            if status != "skipped" and getattr(rep, "when", "call") != "call":
                continue
            name = rep.nodeid.split("::")[-1]
            lines.append((name, status.upper()))
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name, status in sorted(set(lines)):
            terminalreporter.write_line(f"[{status}] {name}")

SIMPLE_SOURCE = """\
import math

def solve(data):
    best = helper(data)
    return best

def helper(data):
    return min(data)
"""


@pytest.fixture(scope="session")
def profile():
    return default_profile()


@pytest.fixture(scope="session")
def library():
    return TemplateLibrary()


def scripted_gateway(responder, limit=100):
    """Gateway over a stateless responder callable (request -> text)."""
    return Gateway(backend=MockBackend(responder=responder), ledger=BudgetLedger(limit=limit))


class StubRunner:
    """Evaluation-harness test double: returns canned protocol responses."""

    def __init__(self, respond):
        self.respond = respond
        self.requests = []

    def run(self, request, time_limit_s):
        self.requests.append(request)
        return self.respond(request)
