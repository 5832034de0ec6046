import numpy as np
import pytest

from oracles import scaled_bessel_oracle
from oseenwake.specfun import DIFF_CROSSOVER, k0_scaled, k1_scaled, k1m0_scaled, scaled_bessel

POINTS = [1e-8, 1e-3, 0.5, 1.0, 7.0, DIFF_CROSSOVER, DIFF_CROSSOVER * (1 + 1e-12), 55.0, 100.0, 700.0]


@pytest.mark.parametrize("x", POINTS)
def test_against_series_oracle(x):
    ref = scaled_bessel_oracle(x)
    got = (k0_scaled(x), k1_scaled(x), k1m0_scaled(x))
    for g, r in zip(got, ref):
        assert abs(g / r - 1) < 1e-13


def test_reference_values():
    assert k0_scaled(1.0) == pytest.approx(1.144463, abs=1e-6)
    assert k0_scaled(100.0) == pytest.approx(0.1251756, abs=1e-7)
    assert k0_scaled(1e-8) == pytest.approx(18.5366, abs=1e-4)
    assert k1_scaled(1.0) == pytest.approx(1.636154, abs=1e-6)
    assert k1_scaled(100.0) == pytest.approx(0.1258, abs=1e-4)
    assert k1m0_scaled(100.0) == pytest.approx(6.27e-4, rel=1e-2)
    # e (K1(1) - K0(1)) = e * 0.180882...; 0.491704 would be off in the fifth digit
    assert k1m0_scaled(1.0) == pytest.approx(0.4916904, abs=1e-7)


def test_large_argument_limits():
    x = np.geomspace(1e3, 1e6, 7)
    lead = np.sqrt(np.pi / (2 * x))
    assert np.allclose(k0_scaled(x) / lead, 1 - 1 / (8 * x), rtol=1e-6)
    assert np.allclose(k1_scaled(x) / k0_scaled(x), 1, atol=1e-3)
    # K1 - K0 ~ sqrt(pi/2x) / (2x): the subtraction would return rounding noise here
    assert np.allclose(k1m0_scaled(x) * 2 * x / lead, 1, rtol=1e-3)


def test_monotone_and_ordered():
    x = np.geomspace(1e-6, 700, 2000)
    k0, k1, d = scaled_bessel(x)
    assert np.all(np.diff(k0) < 0)
    assert np.all(d > 0)
    assert np.allclose(k1, k1_scaled(x), rtol=1e-14)


def test_array_and_scalar_shapes():
    assert np.ndim(k1m0_scaled(2.0)) == 0
    assert k1m0_scaled(np.array([[1.0, 30.0]])).shape == (1, 2)


@pytest.mark.parametrize("f", [k0_scaled, k1_scaled, k1m0_scaled])
@pytest.mark.parametrize("bad", [0.0, -1.0, np.nan])
def test_domain_errors(f, bad):
    with pytest.raises(ValueError):
        f(bad)
