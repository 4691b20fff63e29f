import json
from pathlib import Path

import pytest

from dxlink.config import load_config
from dxlink.service import build_snapshot

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def app_config():
    return load_config(FIXTURES / "config.json")


@pytest.fixture(scope="session")
def snapshot(app_config):
    return build_snapshot(app_config)


@pytest.fixture()
def tmp_config(tmp_path):
    """Copy of the fixture config with a case store inside tmp_path."""
    raw = json.loads((FIXTURES / "config.json").read_text())
    for section in ("ontology", "kb"):
        for key, value in raw[section].items():
            if isinstance(value, str) and value.endswith((".tsv", ".txt")):
                raw[section][key] = str(FIXTURES / value)
    raw["vectors"] = str(FIXTURES / raw["vectors"])
    raw["server"]["case_store"] = str(tmp_path / "cases_store")
    path = tmp_path / "config.json"
    path.write_text(json.dumps(raw))
    return path
