import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bridge_helpers import build_workspace


@pytest.fixture(scope="session")
def bridge_workspace(tmp_path_factory) -> Path:
    """Checkpoints + config built once; model construction is the slow part."""
    root = tmp_path_factory.mktemp("bridge_ckpt")
    config_path = build_workspace(root)
    return config_path
