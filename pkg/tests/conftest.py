from pathlib import Path

import pytest

from helpers import SCENARIO_DIR, diagonal_spec


@pytest.fixture
def make_spec():
    return diagonal_spec


@pytest.fixture
def scenario_dir() -> Path:
    return SCENARIO_DIR
