import math

import numpy as np
import pytest
from scipy import special

from overcommit import normal


@pytest.mark.parametrize("p,z", [
    (0.5, 0.0),
    (0.975, 1.959963984540054),
    (0.99, 2.3263478740408408),
    (0.999, 3.090232306167813),
    (0.99999, 4.264890793923841),
    (1e-10, -6.361340902404056),
])
def test_ppf_tabulated(p, z):
    assert normal.ppf(p) == pytest.approx(z, abs=1e-12)


def test_ppf_against_scipy_grid():
    ps = np.concatenate([np.linspace(1e-6, 1 - 1e-6, 20001), np.logspace(-300, -7, 200)])
    err = max(abs(normal.ppf(float(p)) - special.ndtri(p)) for p in ps)
    assert err < 1e-8


def test_ppf_edges():
    assert normal.ppf(0.0) == -math.inf
    assert normal.ppf(1.0) == math.inf
    with pytest.raises(ValueError):
        normal.ppf(1.5)


def test_cdf_sf_pdf():
    for x in (-8.0, -1.3, 0.0, 0.7, 5.5):
        assert normal.cdf(x) == pytest.approx(special.ndtr(x), rel=1e-14)
        assert normal.sf(x) == pytest.approx(special.ndtr(-x), rel=1e-14)
    assert normal.pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))


def test_round_trip():
    for p in (1e-5, 0.01, 0.3, 0.77, 0.9999):
        assert normal.cdf(normal.ppf(p)) == pytest.approx(p, rel=1e-12)
