import os

from chatpc.utils.logger import default_config_path


def create_chatpc_config():
    chatpc_content = """# chatpc Configuration File (OPTIONAL)
# This file is optional - you can use environment variables instead!
#
# Looked up at (first match wins):
#   - $CHATPC_CONFIG
#   - $VIRTUAL_ENV/config/.chatpc (for venv-specific config)
#   - ~/.chatpc (for global config)
#
# Priority: command-line flags > .chatpc file > Environment Variables > Defaults

# ════════════════════════════════════════════════════════════════
# Chat-completions endpoint (any OpenAI-compatible server)
# ════════════════════════════════════════════════════════════════

CHATPC_BASE_URL = https://api.openai.com/v1
CHATPC_MODEL = gpt-4

# Name of the variable holding the API key (default: CHATPC_API_KEY)
# The key itself can live here too, but never commit it.
CHATPC_API_KEY_ENV = CHATPC_API_KEY
# CHATPC_API_KEY = your-api-key-here

# Sampling: answers per prompt and temperature
CHATPC_N = 10
CHATPC_TEMPERATURE = 1.0

# Request timeout in seconds and retries after the first attempt
CHATPC_TIMEOUT = 60
CHATPC_MAX_RETRIES = 2

# ════════════════════════════════════════════════════════════════
# Runs
# ════════════════════════════════════════════════════════════════

# Significance level of the statistical policy and G² oracle
CHATPC_ALPHA = 0.05

# Parallel CI queries within a PC level
CHATPC_JOBS = 1

# Where graphs, traces and reports are written
CHATPC_OUT = chatpc-out

# DEBUG, INFO, WARNING or ERROR
LOG_LEVEL = WARNING
    """

    chatpc_file = default_config_path()
    target_directory = os.path.dirname(chatpc_file) or "."
    os.makedirs(target_directory, exist_ok=True)

    if os.path.exists(chatpc_file):
        print(f"⚠️  Config file already exists at: {chatpc_file}")
        print("❌ Operation cancelled to prevent overwriting.")
        return None

    with open(chatpc_file, "w") as file:
        file.write(chatpc_content.strip() + "\n")
    print(f"✅ .chatpc file created at: {chatpc_file}")
    return chatpc_file


if __name__ == "__main__":
    create_chatpc_config()
