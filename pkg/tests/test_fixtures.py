import numpy as np
import pytest

from floodbayes.fixtures import TREND_TRUTH, bundled_fixtures, data_path, write_fixtures


@pytest.mark.parametrize("name", sorted(bundled_fixtures()))
def test_bundled_file_matches_generator(name, tmp_path):
    write_fixtures(tmp_path)
    assert (tmp_path / name).read_bytes() == data_path(name).read_bytes()


def test_synthetic_station_shape(synthetic_dataset):
    assert len(synthetic_dataset) == 50
    assert synthetic_dataset.years[0] == 1966 and synthetic_dataset.years[-1] == 2015
    assert TREND_TRUTH.mu1 > 0
    # the covariate rises over the record
    phi = synthetic_dataset.phi
    assert np.polyfit(np.arange(phi.size), phi, 1)[0] > 0
