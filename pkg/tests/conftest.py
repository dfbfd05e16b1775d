import json

import pytest

from flakevocab.ingest import FLAKY, NON_FLAKY, LabeledTest
from flakevocab.synthetic import SyntheticSpec, generate_corpus


def records_jsonl(rows) -> str:
    return "\n".join(json.dumps(r) for r in rows) + "\n"


def labeled(test_id, source, flaky):
    return LabeledTest(test_id, source, FLAKY if flaky else NON_FLAKY)


@pytest.fixture(scope="session")
def small_corpus():
    return generate_corpus(7, SyntheticSpec(n_flaky=40, n_stable=60))


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "skipped"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py::" not in getattr(rep, "nodeid", "") or rep.when not in ("call", "setup"):
                continue
            if rep.when == "setup" and outcome == "passed":
                continue
            props = dict(getattr(rep, "user_properties", []))
            name = rep.nodeid.split("::")[-1]
            lines.append((name, outcome.upper(), props.get("detail", "")))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, outcome, detail in sorted(lines):
            terminalreporter.write_line(f"{name:<44} {outcome:<7} {detail}")
