import json
import os
import pathlib
import subprocess

import pytest

SCHEMA_DIR = pathlib.Path(__file__).resolve().parents[2] / "docs" / "schemas"


@pytest.fixture(scope="session")
def cli():
    path = os.environ.get("FEDSTAB_CLI")
    if not path:
        pytest.skip("FEDSTAB_CLI not set")

    def run(*args, env=None):
        full_env = dict(os.environ)
        full_env.update(env or {})
        return subprocess.run([path, *map(str, args)], capture_output=True, text=True, env=full_env)

    return run


@pytest.fixture(scope="session")
def schema():
    def load(name):
        return json.loads((SCHEMA_DIR / f"{name}.schema.json").read_text())

    return load
