from setuptools import find_packages, setup

with open("README.md", "r") as fh:
    long_description = fh.read()


setup(
    name="chatpc",
    version="0.1.0",
    description="Causal discovery with a language model as the conditional independence oracle",
    long_description_content_type="text/markdown",
    long_description=long_description,
    packages=find_packages(exclude=["tests", "tests.*"]),
    install_requires=[
        "openai>=1.0.0",
        "rich",
        "python-decouple",
        "tenacity",
        "numpy",
        "scipy",
        "pandas",
        "networkx",
    ],
    extras_require={"test": ["pytest", "httpx"]},
    classifiers=[
        "Programming Language :: Python :: 3",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.10",
    entry_points={
        "console_scripts": [
            "chatpc=chatpc.main:main",
            "create-chatpc-config=chatpc.create_config:create_chatpc_config",
        ],
    },
    include_package_data=True,
    package_data={
        "chatpc": ["data/problems/*.json", "data/votes/*.json"],
    },
)
