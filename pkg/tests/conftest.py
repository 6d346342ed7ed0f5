import numpy as np
import pytest

from texpipe.correspondence import DenseCorrespondenceMap, Frame


def make_map(part_id, u=None, v=None) -> DenseCorrespondenceMap:
    """Build a map from plain int arrays; u/v given as raw 16-bit values."""
    pid = np.asarray(part_id, dtype=np.uint8)
    u = np.zeros_like(pid, dtype=np.uint16) if u is None else np.asarray(u, dtype=np.uint16)
    v = np.zeros_like(pid, dtype=np.uint16) if v is None else np.asarray(v, dtype=np.uint16)
    return DenseCorrespondenceMap(pid, u, v)


def random_map(rng: np.random.Generator, height: int, width: int,
               fg_prob: float = 0.7) -> DenseCorrespondenceMap:
    pid = np.where(
        rng.random((height, width)) < fg_prob,
        rng.integers(1, 25, size=(height, width)),
        0,
    ).astype(np.uint8)
    u = rng.integers(0, 65536, size=(height, width)).astype(np.uint16)
    v = rng.integers(0, 65536, size=(height, width)).astype(np.uint16)
    u[pid == 0] = 0
    v[pid == 0] = 0
    return DenseCorrespondenceMap(pid, u, v)


def random_frame(rng: np.random.Generator, height: int, width: int) -> Frame:
    return Frame(rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
