"""Shared fixtures: packaged data, engines, instrumented providers.

Every provider used anywhere in the suite is wrapped in an
InstrumentedProvider feeding one global sink; the session-finish hook
asserts that no payload ever contained a nucleotide run at or above the
privacy threshold. This is the enforceable form of the no-leak guarantee.
"""

from __future__ import annotations

import pytest

from crisprflow.config import PACKAGED_FIXTURES, Fixtures, build_engine, load_fixtures
from crisprflow.providers import InstrumentedProvider, ScriptedProvider
from crisprflow.safety import scan_nucleotide_runs

# one sink for the whole test run
PAYLOAD_SINK: list[str] = []


@pytest.fixture(scope="session")
def fixtures() -> Fixtures:
    return load_fixtures(PACKAGED_FIXTURES)


@pytest.fixture()
def engine(fixtures):
    return build_engine(fixtures)


@pytest.fixture(scope="session")
def table(fixtures):
    return fixtures.registry.task_table()


@pytest.fixture()
def make_provider():
    """Factory: scripted provider from (matcher, response) pairs, instrumented."""

    def factory(pairs, strict=False):
        return InstrumentedProvider(ScriptedProvider.from_pairs(pairs, strict=strict), sink=PAYLOAD_SINK)

    return factory


@pytest.fixture()
def demo_provider():
    inner = ScriptedProvider.from_file(PACKAGED_FIXTURES / "scripts" / "demo_provider.json")
    return InstrumentedProvider(inner, sink=PAYLOAD_SINK)


# knockout meta prompt used across end-to-end tests
KNOCKOUT_META = (
    "Knock out {gene} in the human A375 cell line; prefer multiplexed editing "
    "with a low off-target rate, lentiviral delivery and NGS validation."
)


def knockout_request(gene: str) -> str:
    return (
        f"Knock out {gene} in the human A375 cell line; prefer multiplexed "
        "editing with a low off-target rate."
    )


def pytest_sessionfinish(session, exitstatus):
    leaked = [p for p in PAYLOAD_SINK if scan_nucleotide_runs(p, 20)]
    line = (
        f"[no-leak] provider payloads inspected: {len(PAYLOAD_SINK)}, "
        f"payloads with runs >= 20 nt: {len(leaked)}"
    )
    print("\n" + line)
    assert not leaked, line
