"""Test fixtures for lineprobe."""

import logging

import pytest

from lineprobe.encoding import write_sparse_map
from lineprobe.models import SparseMap


@pytest.fixture
def two_spike_sample() -> SparseMap:
    """Two well-separated unit spikes on a 32x32 grid."""
    return SparseMap.from_centers(32, [(11, 12), (20, 19)])


@pytest.fixture
def sample_file(tmp_path, two_spike_sample):
    """``two_spike_sample`` written as a CSV grid."""
    path = tmp_path / "X.csv"
    write_sparse_map(path, two_spike_sample)
    return path


@pytest.fixture
def restore_log_levels():
    """The CLI group callback mutates global logger levels; undo it."""
    names = (None, "lineprobe", "lineprobe.cli.__main__")
    saved = {name: logging.getLogger(name).level for name in names}
    yield
    for name, level in saved.items():
        logging.getLogger(name).setLevel(level)
