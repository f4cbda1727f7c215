from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from entromap import default_config, read_transcript

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = Path(__file__).resolve().parent / "fixtures"
ARCHIVES = FIXTURES / "archives"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def archives_dir() -> Path:
    return ARCHIVES


@pytest.fixture()
def repo_cwd(monkeypatch) -> Path:
    monkeypatch.chdir(ROOT)
    return ROOT


@pytest.fixture(scope="session")
def default_cfg():
    return default_config()


@pytest.fixture(scope="session")
def tiny_transcript():
    return read_transcript((FIXTURES / "tiny.jsonl").read_bytes())


@pytest.fixture(scope="session")
def golden_transcript():
    return read_transcript((FIXTURES / "golden_scan.jsonl").read_bytes())


def random_distribution(rng: np.random.Generator, size: int) -> np.ndarray:
    weights = rng.gamma(1.0, 1.0, size)
    total = weights.sum()
    if total == 0:
        weights[0] = 1.0
        total = 1.0
    return weights / total
