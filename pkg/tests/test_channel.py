import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polaruep.channel import (
    ChannelParams,
    awgn_transmit,
    bpsk_modulate,
    channel_llr,
    ebn0_to_esn0,
    ebn0_to_sigma,
    esn0_to_sigma,
)


@pytest.mark.parametrize("eb, rate, sigma", [
    (10 * np.log10(2), 0.5, np.sqrt(0.5)),
    (0.0, 1.0, np.sqrt(0.5)),
    (10.0, 0.5, np.sqrt(0.1)),
])
def test_ebn0_to_sigma(eb, rate, sigma):
    assert ebn0_to_sigma(eb, rate) == pytest.approx(sigma, rel=1e-12)


def test_three_db_point_is_zero_db_es():
    assert ebn0_to_sigma(3.0103, 0.5) == pytest.approx(np.sqrt(0.5), rel=1e-5)
    assert ebn0_to_esn0(3.0103, 0.5) == pytest.approx(0.0, abs=1e-4)


@pytest.mark.parametrize("rate", [0.0, -0.5, 1.5])
def test_rate_out_of_range(rate):
    with pytest.raises(ValueError):
        ebn0_to_sigma(1.0, rate)


def test_channel_params_consistent():
    p = ChannelParams.from_ebn0(4.0, 0.5)
    assert p.sigma == pytest.approx(esn0_to_sigma(p.es_n0_db))
    q = ChannelParams.from_esn0(p.es_n0_db, 0.5)
    assert q.eb_n0_db == pytest.approx(4.0)
    assert q.sigma == pytest.approx(p.sigma)


@pytest.mark.parametrize("bits, symbols", [
    ((0, 1, 0), (1.0, -1.0, 1.0)),
    ((0, 0, 0, 0), (1.0, 1.0, 1.0, 1.0)),
    ((1,), (-1.0,)),
])
def test_bpsk(bits, symbols):
    np.testing.assert_array_equal(bpsk_modulate(bits), symbols)


def test_awgn_tiny_sigma_is_identity():
    s = bpsk_modulate([0, 1, 1, 0])
    np.testing.assert_allclose(awgn_transmit(s, 1e-300, np.random.default_rng(0)), s)


def test_awgn_seeded_determinism():
    s = np.ones(1000)
    a = awgn_transmit(s, 0.7, np.random.default_rng(42))
    b = awgn_transmit(s, 0.7, np.random.default_rng(42))
    np.testing.assert_array_equal(a, b)


def test_awgn_variance():
    sigma = 0.7071
    s = bpsk_modulate(np.random.default_rng(1).integers(0, 2, 10 ** 6))
    y = awgn_transmit(s, sigma, np.random.default_rng(2))
    assert np.var(y - s) == pytest.approx(0.5, abs=0.01)
    assert np.var(y - s) == pytest.approx(sigma ** 2, rel=0.02)


@pytest.mark.parametrize("sigma", [0.0, -1.0])
def test_nonpositive_sigma(sigma):
    with pytest.raises(ValueError):
        awgn_transmit([1.0], sigma, np.random.default_rng(0))
    with pytest.raises(ValueError):
        channel_llr([1.0], sigma)


def test_channel_llr_examples():
    assert channel_llr(1.0, 1.0) == pytest.approx(2.0)
    assert channel_llr(0.0, 0.3) == 0.0
    assert channel_llr(-0.5, 0.7071) == pytest.approx(-2.0, rel=1e-4)
    assert channel_llr(10.0, 0.01) == 500.0


@given(st.floats(-50, 50), st.floats(0.01, 5))
def test_llr_sign_follows_y(y, sigma):
    assert np.sign(channel_llr(y, sigma)) == np.sign(y)
