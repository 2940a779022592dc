from types import SimpleNamespace

import httpx
import openai
import pytest

from chatpc.app.ai_providers import (REPLAY_ONLY, ChatCompletionsProvider,
                                     LlmConfig, complete_batch,
                                     resolve_api_key)
from chatpc.app.cassette import CassetteStore
from chatpc.app.problems import CiQuery
from chatpc.app.prompt import build_prompt
from chatpc.utils.errors import (AuthError, CassetteMiss,
                                 MalformedProviderReply, RateLimited,
                                 TransportError)

REQUEST = httpx.Request("POST", "http://localhost:9/v1/chat/completions")


def reply(*texts):
    return SimpleNamespace(
        choices=[SimpleNamespace(message=SimpleNamespace(content=t)) for t in texts]
    )


class FakeClient:
    """Stands in for openai.OpenAI; each create() pops the next outcome"""

    def __init__(self, *outcomes):
        self.outcomes = list(outcomes)
        self.requests = []
        self.chat = SimpleNamespace(completions=SimpleNamespace(create=self.create))

    def create(self, **kwargs):
        self.requests.append(kwargs)
        outcome = self.outcomes.pop(0)
        if isinstance(outcome, Exception):
            raise outcome
        return outcome


def status_error(cls, code, headers=None):
    response = httpx.Response(code, request=REQUEST, headers=headers or {})
    return cls(f"HTTP {code}", response=response, body=None)


def test_sample_sends_model_and_n(llm_config):
    client = FakeClient(reply("[NO]", "[YES]", "[NO]"))
    provider = ChatCompletionsProvider(llm_config, client=client)
    texts = provider.sample([{"role": "user", "content": "hi"}], 3)
    assert texts == ["[NO]", "[YES]", "[NO]"]
    assert client.requests[0]["model"] == "test-model"
    assert client.requests[0]["n"] == 3
    assert client.requests[0]["temperature"] == 1.0


def test_sample_tops_up_when_server_ignores_n(llm_config):
    client = FakeClient(reply("[NO]"), reply("[YES]", "[YES]"))
    texts = ChatCompletionsProvider(llm_config, client=client).sample([], 3)
    assert texts == ["[NO]", "[YES]", "[YES]"]
    assert [r["n"] for r in client.requests] == [3, 2]


def test_transient_errors_are_retried(llm_config):
    client = FakeClient(
        openai.APIConnectionError(request=REQUEST),
        status_error(openai.InternalServerError, 500),
        reply("[NO]", "[NO]", "[NO]"),
    )
    texts = ChatCompletionsProvider(llm_config, client=client).sample([], 3)
    assert len(texts) == 3
    assert len(client.requests) == 3


def test_retries_give_up_with_attempt_count(llm_config):
    client = FakeClient(*[openai.APIConnectionError(request=REQUEST) for _ in range(3)])
    with pytest.raises(TransportError) as info:
        ChatCompletionsProvider(llm_config, client=client).sample([], 3)
    assert info.value.attempts == llm_config.max_retries + 1


def test_rate_limit_carries_retry_after(llm_config):
    errors = [
        status_error(openai.RateLimitError, 429, {"retry-after": "0"}) for _ in range(3)
    ]
    with pytest.raises(RateLimited) as info:
        ChatCompletionsProvider(llm_config, client=FakeClient(*errors)).sample([], 3)
    assert info.value.retry_after == 0.0


def test_auth_errors_are_not_retried(llm_config):
    client = FakeClient(status_error(openai.AuthenticationError, 401))
    with pytest.raises(AuthError):
        ChatCompletionsProvider(llm_config, client=client).sample([], 3)
    assert len(client.requests) == 1


def test_client_errors_are_transport_errors(llm_config):
    client = FakeClient(status_error(openai.BadRequestError, 400))
    with pytest.raises(TransportError):
        ChatCompletionsProvider(llm_config, client=client).sample([], 3)


def test_empty_reply_is_malformed(llm_config):
    client = FakeClient(reply())
    with pytest.raises(MalformedProviderReply):
        ChatCompletionsProvider(llm_config, client=client).sample([], 3)


def test_missing_key_is_an_auth_error(monkeypatch):
    monkeypatch.delenv("CHATPC_TEST_KEY", raising=False)
    with pytest.raises(AuthError):
        resolve_api_key("CHATPC_TEST_KEY")


def test_config_validation():
    with pytest.raises(ValueError):
        LlmConfig(n=0)
    with pytest.raises(ValueError):
        LlmConfig(timeout=0)


def test_from_config_prefers_overrides(monkeypatch):
    monkeypatch.setenv("CHATPC_MODEL", "from-env")
    monkeypatch.setenv("CHATPC_N", "7")
    settings = LlmConfig.from_config(model="from-flag", n=None)
    assert settings.model == "from-flag"
    assert settings.n == 7


def test_complete_batch_records_then_replays(tmp_path, burglary, llm_config, scripted):
    prompt = build_prompt(burglary, CiQuery("B", "E"))
    store = CassetteStore(str(tmp_path / "tape.jsonl"))
    provider = scripted(["[YES (70%)]"] * 3)

    first = complete_batch(llm_config, prompt, store, provider=provider)
    assert len(provider.calls) == 1

    replay = CassetteStore(str(tmp_path / "tape.jsonl"))
    second = complete_batch(llm_config, prompt, replay, mode=REPLAY_ONLY, provider=provider)
    assert second == first
    assert len(provider.calls) == 1


def test_replay_only_miss(burglary, llm_config, scripted):
    prompt = build_prompt(burglary, CiQuery("B", "E"))
    provider = scripted(["[NO]"] * 3)
    with pytest.raises(CassetteMiss):
        complete_batch(llm_config, prompt, CassetteStore(None), REPLAY_ONLY, provider)
    assert provider.calls == []
