#!/usr/bin/env python
"""Chat-completions access for CI questions, with retries and record/replay"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Optional

import openai
from tenacity import (RetryCallState, Retrying, retry_if_exception_type,
                      stop_after_attempt, wait_exponential)

from chatpc.utils.errors import (AuthError, CassetteMiss,
                                 MalformedProviderReply, RateLimited,
                                 TransportError)
from chatpc.utils.logger import Logger, config

from .cassette import CassetteEntry, CassetteStore
from .prompt import PromptBundle

logger_instance = Logger("__ai_providers__")
logger = logger_instance.get_logger()

RETRYABLE = (
    openai.APIConnectionError,
    openai.APITimeoutError,
    openai.InternalServerError,
    openai.RateLimitError,
)

RECORD = "record"
REPLAY_ONLY = "replay_only"


@dataclass(frozen=True)
class LlmConfig:
    base_url: str = "https://api.openai.com/v1"
    model: str = "gpt-4"
    temperature: float = 1.0
    n: int = 10
    timeout: float = 60.0
    max_retries: int = 2
    api_key_env: str = "CHATPC_API_KEY"
    retry_backoff: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")

    @classmethod
    def from_config(cls, **overrides) -> "LlmConfig":
        """Settings from .chatpc / environment; non-None overrides win"""
        settings = dict(
            base_url=config("CHATPC_BASE_URL", default=cls.base_url),
            model=config("CHATPC_MODEL", default=cls.model),
            temperature=config("CHATPC_TEMPERATURE", default=cls.temperature, cast=float),
            n=config("CHATPC_N", default=cls.n, cast=int),
            timeout=config("CHATPC_TIMEOUT", default=cls.timeout, cast=float),
            max_retries=config("CHATPC_MAX_RETRIES", default=cls.max_retries, cast=int),
            api_key_env=config("CHATPC_API_KEY_ENV", default=cls.api_key_env),
        )
        settings.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**settings)


def resolve_api_key(api_key_env: str) -> str:
    api_key = config(api_key_env, default=None)
    if not api_key:
        raise AuthError(
            f"No API key: set {api_key_env} in the environment or in your .chatpc file"
        )
    return api_key


def _retry_after(error: BaseException) -> Optional[float]:
    response = getattr(error, "response", None)
    if response is None:
        return None
    value = response.headers.get("retry-after")
    try:
        return float(value) if value is not None else None
    except ValueError:
        return None


class _WaitHonouringRetryAfter:
    def __init__(self, backoff: float):
        self.exponential = wait_exponential(multiplier=backoff, max=60)

    def __call__(self, retry_state: RetryCallState) -> float:
        wait = self.exponential(retry_state)
        error = retry_state.outcome.exception() if retry_state.outcome else None
        hinted = _retry_after(error) if error is not None else None
        return max(wait, hinted) if hinted is not None else wait


class AIProvider(ABC):
    """Base class for chat providers"""

    @abstractmethod
    def sample(self, messages: List[dict], n: int) -> List[str]:
        """Return n independently sampled completion texts"""
        pass


class ChatCompletionsProvider(AIProvider):
    """Any OpenAI-compatible /chat/completions endpoint"""

    def __init__(self, llm_config: LlmConfig, client=None):
        self.config = llm_config
        if client is None:
            client = openai.OpenAI(
                base_url=llm_config.base_url,
                api_key=resolve_api_key(llm_config.api_key_env),
                timeout=llm_config.timeout,
                max_retries=0,
            )
        self.client = client

    def _request(self, messages: List[dict], n: int) -> List[str]:
        response = self.client.chat.completions.create(
            model=self.config.model,
            messages=messages,
            temperature=self.config.temperature,
            n=n,
        )
        if not response or not response.choices:
            raise MalformedProviderReply("Provider returned no choices")
        texts = []
        for choice in response.choices:
            content = choice.message.content if choice.message else None
            if content is None:
                raise MalformedProviderReply("Provider returned a choice without text")
            texts.append(content)
        return texts

    def _request_with_retries(self, messages: List[dict], n: int) -> List[str]:
        attempts = 0

        def log_retry(retry_state: RetryCallState) -> None:
            error = retry_state.outcome.exception()
            logger.warning(
                f"Attempt {retry_state.attempt_number} failed ({type(error).__name__}); retrying"
            )

        retrying = Retrying(
            retry=retry_if_exception_type(RETRYABLE),
            stop=stop_after_attempt(self.config.max_retries + 1),
            wait=_WaitHonouringRetryAfter(self.config.retry_backoff),
            before_sleep=log_retry,
            reraise=True,
        )
        try:
            for attempt in retrying:
                with attempt:
                    attempts += 1
                    return self._request(messages, n)
        except openai.AuthenticationError as error:
            raise AuthError(f"Authentication rejected by {self.config.base_url}: {error}")
        except openai.PermissionDeniedError as error:
            raise AuthError(f"Permission denied by {self.config.base_url}: {error}")
        except openai.RateLimitError as error:
            raise RateLimited(
                f"Rate limited after {attempts} attempt(s)", retry_after=_retry_after(error)
            )
        except (openai.APIConnectionError, openai.InternalServerError) as error:
            raise TransportError(
                f"Request to {self.config.base_url} failed after {attempts} attempt(s): {error}",
                attempts=attempts,
            )
        except openai.APIStatusError as error:
            raise TransportError(
                f"Provider answered HTTP {error.status_code}: {error}", attempts=attempts
            )

    def sample(self, messages: List[dict], n: int) -> List[str]:
        texts: List[str] = []
        # servers that ignore n return fewer choices; ask again for the rest
        while len(texts) < n:
            texts.extend(self._request_with_retries(messages, n - len(texts)))
        return texts[:n]


def get_ai_provider(llm_config: LlmConfig, client=None) -> AIProvider:
    return ChatCompletionsProvider(llm_config, client=client)


def complete_batch(
    llm_config: LlmConfig,
    prompt: PromptBundle,
    cassette: Optional[CassetteStore] = None,
    mode: str = RECORD,
    provider: Optional[AIProvider] = None,
) -> List[str]:
    """n completions for prompt; cassette hits never touch the network.

    Live completions are recorded before they are returned.
    """
    if cassette is not None:
        entry = cassette.lookup(prompt.fingerprint)
        if entry is not None:
            if entry.model != llm_config.model:
                logger.debug(
                    f"Replaying {entry.model} completions for model {llm_config.model}"
                )
            return list(entry.completions)
    if mode == REPLAY_ONLY:
        raise CassetteMiss(
            f"No recorded completions for {prompt.query or prompt.fingerprint[:12]}"
        )

    provider = provider or get_ai_provider(llm_config)
    texts = provider.sample(prompt.as_chat(), llm_config.n)

    if cassette is not None and prompt.query is not None:
        cassette.record(
            CassetteEntry(
                fingerprint=prompt.fingerprint,
                query=prompt.query,
                model=llm_config.model,
                completions=tuple(texts),
                problem_id=prompt.problem_id,
            )
        )
    return texts

