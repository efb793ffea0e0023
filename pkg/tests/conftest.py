from __future__ import annotations

import numpy as np
import pytest

from fcalab.lattice import ColorConfig, Cycle, Segment
from fcalab.rng import substream
from fcalab.solver import build_qtable


def random_cycle(kappa: int, length: int, seed: int, time_stamp: int = 0) -> ColorConfig:
    colors = substream(seed, 0).integers(0, kappa, size=length, dtype=np.uint8)
    return ColorConfig(kappa, colors, Cycle(length), time_stamp)


def random_segment(kappa: int, lo: int, hi: int, seed: int) -> ColorConfig:
    colors = substream(seed, 0).integers(0, kappa, size=hi - lo + 1, dtype=np.uint8)
    return ColorConfig(kappa, colors, Segment(lo, hi))


@pytest.fixture(scope="session")
def qcols_100k():
    """Shared strict floating tables to horizon 1e5 (columns x <= 2 only)."""
    return build_qtable(100_000, mode="float", keep_rows=False)


@pytest.fixture(scope="session")
def qtables_exact_60():
    return build_qtable(60, mode="exact")
