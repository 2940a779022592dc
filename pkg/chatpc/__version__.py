from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("chatpc")
except PackageNotFoundError:
    # not installed (running from a checkout)
    __version__ = "0.0.0-dev"
