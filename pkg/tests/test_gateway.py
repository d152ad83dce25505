"""Prompt construction, structured parsing, provider behavior."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, strategies as st

from crisprflow import prompts
from crisprflow.errors import (
    FilterBlocked,
    MissingKey,
    NoObjectFound,
    ProviderTransport,
    ScriptMiss,
    UnparsableResponse,
    WrongValueShape,
)
from crisprflow.providers import (
    ProviderConfig,
    ScriptedProvider,
    complete,
    complete_structured,
    parse_structured,
)


# ---------------------------------------------------------------------------
# template fidelity


def test_decomposition_template_golden():
    template = prompts.load_template("decomposition")
    bundle = prompts.build_decomposition_prompt("", "")
    emptied = template.replace("{Task Description Table}", "").replace("{user_message}", "")
    assert bundle.filled_text == emptied
    # response-format block appears exactly as in the template
    assert '{{\n"Thoughts": "<thoughts>",\n"Tasks": ["<task1>", "<task2>"]  ## a list of task names \n}}' in bundle.filled_text


def test_decomposition_contains_demonstration_and_table(table):
    bundle = prompts.build_decomposition_prompt("knockout EGFR", table.render())
    assert (
        "If the user only needs to design guideRNA for knockout, then return "
        "['knockout.StateStep1', 'knockout.StateStep3']."
    ) in bundle.filled_text
    assert "For knockout" in bundle.filled_text
    assert "knockout.StateStep3: guideRNA design for knockout : needs to complete knockout.StateStep1 first" in bundle.filled_text
    assert '"knockout EGFR"' in bundle.filled_text


def test_autopilot_template_golden():
    template = prompts.load_template("autopilot")
    bundle = prompts.build_autopilot_prompt("", "")
    emptied = template.replace("{meta_prompt}", "").replace("{system_message}", "")
    assert bundle.filled_text == emptied
    assert "then directly output one choice" in bundle.filled_text
    assert 'answer the question with "I don\'t know"' in bundle.filled_text


def test_builders_block_sequences():
    run25 = "ACGTA" * 5
    with pytest.raises(FilterBlocked) as err:
        prompts.build_decomposition_prompt(f"please use {run25} for this", "")
    assert err.value.findings[0].length == 25
    with pytest.raises(FilterBlocked):
        prompts.build_autopilot_prompt("clean", "seq: " + "ACGT" * 5)


def test_empty_table_is_valid():
    bundle = prompts.build_decomposition_prompt("x", "")
    assert "## Task Description Table\n\n\n" in bundle.filled_text


def test_substitute_refuses_unknown_placeholder():
    with pytest.raises(KeyError):
        prompts.substitute("no placeholders here", {"user_message": "x"})


# ---------------------------------------------------------------------------
# parse_structured


def test_parse_exact_object():
    fields = parse_structured('{"Thoughts":"t","Tasks":["a"]}', {"Thoughts", "Tasks"})
    assert fields == {"Thoughts": "t", "Tasks": ["a"]}


def test_parse_fenced_with_chatter():
    raw = 'Sure! Here you go:\n```json\n{"Thoughts": "t", "Tasks": ["a", "b"]}\n```\nHope that helps.'
    fields = parse_structured(raw, {"Thoughts", "Tasks"})
    assert fields["Tasks"] == ["a", "b"]


def test_parse_skips_invalid_brace_prefix():
    raw = 'weights {not json} then {"Answer": "ok", "Thoughts": "t"}'
    assert parse_structured(raw, {"Answer"})["Answer"] == "ok"


def test_parse_missing_key():
    with pytest.raises(MissingKey) as err:
        parse_structured('{"Thoughts":"t"}', {"Thoughts", "Answer"})
    assert err.value.key == "Answer"


def test_parse_wrong_shape():
    with pytest.raises(WrongValueShape):
        parse_structured('{"Tasks": 5}', {"Tasks"})
    with pytest.raises(WrongValueShape):
        parse_structured('{"Tasks": [1, 2]}', {"Tasks"})


def test_parse_no_object():
    with pytest.raises(NoObjectFound):
        parse_structured("no json at all", {"Tasks"})


field_maps = st.dictionaries(
    st.text(st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=12),
    st.one_of(
        st.text(st.characters(blacklist_categories=("Cs",)), max_size=40),
        st.lists(st.text(st.characters(blacklist_categories=("Cs",)), max_size=20), max_size=5),
    ),
    min_size=1,
    max_size=6,
)


@given(field_maps)
def test_parse_serialize_roundtrip(fields):
    raw = json.dumps(fields, ensure_ascii=False)
    assert parse_structured(raw, set(fields)) == fields


# ---------------------------------------------------------------------------
# providers


def _bundle(text="hello"):
    return prompts.PromptBundle(template_id="test", filled_text=text, placeholders={})


def test_scripted_first_match_wins():
    provider = ScriptedProvider.from_pairs([(["EGFR"], "one"), ([], "fallback")])
    assert provider.complete("about EGFR please") == "one"
    assert provider.complete("anything else") == "fallback"
    assert len(provider.calls) == 2


def test_scripted_strict_requires_exactly_one():
    provider = ScriptedProvider.from_pairs([(["a"], "1"), (["b"], "2")], strict=True)
    assert provider.complete("only a here") == "1"
    with pytest.raises(ScriptMiss):
        provider.complete("both a and b")
    with pytest.raises(ScriptMiss):
        provider.complete("neither")


def test_scripted_empty_script_misses():
    with pytest.raises(ScriptMiss):
        ScriptedProvider([], strict=True).complete("x")


class FailingProvider:
    def __init__(self):
        self.attempts = 0

    def complete(self, prompt):
        self.attempts += 1
        raise ProviderTransport("boom")


def test_complete_retries_then_raises():
    provider = FailingProvider()
    with pytest.raises(ProviderTransport):
        complete(_bundle(), provider, ProviderConfig(max_retries=2))
    assert provider.attempts == 3


def test_provider_config_validation():
    with pytest.raises(ValueError):
        ProviderConfig(timeout_seconds=0)
    with pytest.raises(ValueError):
        ProviderConfig(max_retries=-1)


def test_complete_structured_repair_then_success():
    provider = ScriptedProvider.from_pairs(
        [
            (["could not be parsed"], '{"Thoughts": "fixed", "Tasks": ["a"]}'),
            ([], "just prose, no json"),
        ]
    )
    fields = complete_structured(_bundle(), {"Thoughts", "Tasks"}, provider)
    assert fields["Thoughts"] == "fixed"
    assert len(provider.calls) == 2
    assert "could not be parsed" in provider.calls[1]


def test_complete_structured_repair_then_hard_failure():
    provider = ScriptedProvider.from_pairs([([], "still just prose")])
    with pytest.raises(UnparsableResponse):
        complete_structured(_bundle(), {"Thoughts", "Tasks"}, provider)
    assert len(provider.calls) == 2


# ---------------------------------------------------------------------------
# HTTP provider (transport mocked)


class DummyHttpResponse:
    def __init__(self, status_code=200, payload=None):
        self.status_code = status_code
        self._payload = payload

    def json(self):
        if self._payload is None:
            raise ValueError("no json")
        return self._payload


def test_http_provider_happy_path(monkeypatch):
    from crisprflow.providers import HttpProvider

    seen = {}

    def fake_post(url, json=None, headers=None, timeout=None):
        seen.update(url=url, body=json, headers=headers, timeout=timeout)
        return DummyHttpResponse(
            200, {"choices": [{"message": {"content": "canned completion"}}]}
        )

    monkeypatch.setattr("crisprflow.providers.httpx.post", fake_post)
    provider = HttpProvider(
        ProviderConfig(endpoint="https://llm.test/v1/chat", model="m1", timeout_seconds=7),
        api_key="sekret",
    )
    assert provider.complete("hello") == "canned completion"
    assert seen["url"] == "https://llm.test/v1/chat"
    assert seen["body"]["model"] == "m1"
    assert seen["body"]["messages"] == [{"role": "user", "content": "hello"}]
    assert seen["body"]["temperature"] == 0.0  # deterministic default
    assert seen["headers"]["Authorization"] == "Bearer sekret"
    assert seen["timeout"] == 7


def test_http_provider_error_statuses(monkeypatch):
    from crisprflow.errors import ProviderTimeout
    from crisprflow.providers import HttpProvider
    import httpx

    provider = HttpProvider(ProviderConfig(endpoint="https://llm.test/v1/chat"))

    monkeypatch.setattr(
        "crisprflow.providers.httpx.post",
        lambda *a, **k: DummyHttpResponse(500),
    )
    with pytest.raises(ProviderTransport):
        provider.complete("x")

    monkeypatch.setattr(
        "crisprflow.providers.httpx.post",
        lambda *a, **k: DummyHttpResponse(200, {"unexpected": True}),
    )
    with pytest.raises(ProviderTransport):
        provider.complete("x")

    def raise_timeout(*a, **k):
        raise httpx.ReadTimeout("too slow")

    monkeypatch.setattr("crisprflow.providers.httpx.post", raise_timeout)
    with pytest.raises(ProviderTimeout):
        provider.complete("x")


def test_http_provider_requires_endpoint():
    from crisprflow.providers import HttpProvider

    with pytest.raises(ValueError):
        HttpProvider(ProviderConfig())


def test_config_from_env():
    from crisprflow.providers import config_from_env

    cfg = config_from_env(
        {
            "CRISPRFLOW_PROVIDER_URL": "https://llm.test",
            "CRISPRFLOW_PROVIDER_MODEL": "m2",
            "CRISPRFLOW_PROVIDER_TIMEOUT": "12.5",
            "CRISPRFLOW_PROVIDER_RETRIES": "3",
        }
    )
    assert cfg.endpoint == "https://llm.test"
    assert cfg.model == "m2"
    assert cfg.timeout_seconds == 12.5
    assert cfg.max_retries == 3
    assert cfg.temperature == 0.0
