import pytest

from pathlib import Path

from sierra.core import SubjectRecord
from sierra.store import Store

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"

MASTER_KEY_HEX = "8a5d2c7e1f4b9a6d3e8c0b5f2a7d4e9c6b1a8f3d0e7c4b9a2f5d8e1c6b3a0f7d"
MASTER_KEY = bytes.fromhex(MASTER_KEY_HEX)


@pytest.fixture
def master_key() -> bytes:
    return MASTER_KEY


@pytest.fixture
def store(tmp_path) -> Store:
    return Store(tmp_path / "data", master_key=MASTER_KEY)


@pytest.fixture
def store_with_subject(store) -> Store:
    store.put_subject(SubjectRecord(id="s1", cohort="knee", phi={}, created_at=0))
    return store


def oxford_source() -> str:
    return (FIXTURES / "oxford.quest").read_text("utf-8")
