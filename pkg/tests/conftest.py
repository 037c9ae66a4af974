import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from powersig.trace import Channel, PowerTrace


@pytest.fixture
def make_trace():
    def _make(values, rate=100.0, channel=Channel.CURRENT_MAGNITUDE, **meta):
        return PowerTrace(np.asarray(values, dtype=np.float64), rate,
                          channel, meta)
    return _make
