"""Global pytest configuration and fixtures for all tests.

CRITICAL: Environment variables MUST be set BEFORE importing any simulator code
because Pydantic Settings loads config at import time.
"""

import os

_TEST_ENV_VARS = {
    "QVOTE_LOG": "quiet",
    "QVOTE_LOG_FORMAT": "human",
    "QVOTE_INFRASTRUCTURE_PROVIDER": "memory",
    # Smaller Monte-Carlo batteries keep the unit suite fast
    "QVOTE_STAT_TRIALS": "4000",
    "QVOTE_FAIRNESS_TRIALS": "500",
    "QVOTE_SAMPLED_AUDIT_SAMPLES": "1500",
}

for key, value in _TEST_ENV_VARS.items():
    os.environ.setdefault(key, value)

# Now it's safe to import pytest and the package
from pathlib import Path  # noqa: E402

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from qvote.models.config import ScenarioConfig  # noqa: E402

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture
def rng():
    """Fixed-seed generator for primitive-level tests."""
    return np.random.default_rng(1234)


@pytest.fixture
def scenario_dir() -> Path:
    return SCENARIO_DIR


@pytest.fixture
def honest3() -> ScenarioConfig:
    """Three voters, votes [1, 0, 1], three honest miners."""
    return ScenarioConfig(n_voters=3, votes=[1, 0, 1], m_miners=3, seed=42)


@pytest.fixture
def make_scenario():
    """Build a ScenarioConfig with defaults suitable for tests."""

    def _make(**overrides) -> ScenarioConfig:
        data = {"n_voters": 3, "votes": [1, 0, 1], "m_miners": 3, "seed": 42}
        data.update(overrides)
        return ScenarioConfig.model_validate(data)

    return _make
