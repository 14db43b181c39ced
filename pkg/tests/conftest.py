import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from magtorus.graph import PhaseGraph  # noqa: E402


@pytest.fixture
def two_node():
    """0 -> 1 costs 1, 1 -> 0 costs -3, unit durations: mean -1."""
    return PhaseGraph.from_edges(2, [(0, 1, 1.0), (1, 0, -3.0)], h_time=1.0)
