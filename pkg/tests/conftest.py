import numpy as np
import pytest

from respire.dataio import AlignedDataset
from respire.synthlab import make_calibration_dataset


@pytest.fixture
def small_dataset():
    """120-point smooth calibration dataset, fixed seed."""
    return make_calibration_dataset(n=120, seed=5)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def replace_targets(ds: AlignedDataset, y) -> AlignedDataset:
    return AlignedDataset(t=ds.t, x1=ds.x1, x2=ds.x2, temp_c=ds.temp_c,
                          y=np.asarray(y, dtype=float))
