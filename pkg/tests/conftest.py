import os

# keep a developer's ~/.chatpc out of the test run
os.environ["CHATPC_CONFIG"] = os.path.join(os.path.dirname(__file__), "no-such.chatpc")

import pytest  # noqa: E402

from chatpc.app.ai_providers import AIProvider, LlmConfig  # noqa: E402
from chatpc.app.problems import load_bundled_problem  # noqa: E402


class ScriptedProvider(AIProvider):
    """Returns canned completions and records every request"""

    def __init__(self, replies):
        self.replies = replies
        self.calls = []

    def sample(self, messages, n):
        self.calls.append((messages, n))
        if callable(self.replies):
            return self.replies(messages, n)
        return list(self.replies)[:n]


@pytest.fixture
def burglary():
    return load_bundled_problem("burglary")


@pytest.fixture
def cancer():
    return load_bundled_problem("cancer")


@pytest.fixture
def nao_dk_med():
    return load_bundled_problem("nao-dk-med")


@pytest.fixture
def spurious():
    return load_bundled_problem("spurious")


@pytest.fixture
def llm_config():
    return LlmConfig(base_url="http://localhost:9/v1", model="test-model", n=3, retry_backoff=0.0)


@pytest.fixture
def scripted():
    return ScriptedProvider
