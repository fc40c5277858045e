import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coopcf import (ChannelPair, ConfigurationError, DimensionError, GeometryScenario, ParameterError,
                    draw_rayleigh, place_on_arc, preset_scenario, rate_nc)
from coopcf.channel import DEFAULT_MAX_GAIN, channel_from_positions


def test_rayleigh_shapes_and_diagonal():
    ch = draw_rayleigh(2, 1, 3)
    assert ch.H.shape == (2, 1) and ch.G.shape == (2, 2)
    assert ch.G[0, 0] == 0 and ch.G[1, 1] == 0
    one = draw_rayleigh(1, 1, 5)
    np.testing.assert_array_equal(one.G, [[0.0]])


def test_rayleigh_bad_dimensions():
    with pytest.raises(DimensionError):
        draw_rayleigh(1, 2, 0)
    with pytest.raises(DimensionError):
        draw_rayleigh(0, 0, 0)


@given(st.integers(0, 2 ** 63 - 1))
def test_rayleigh_reproducible(seed):
    a, b = draw_rayleigh(3, 2, seed), draw_rayleigh(3, 2, seed)
    np.testing.assert_array_equal(a.H, b.H)
    np.testing.assert_array_equal(a.G, b.G)
    assert np.all(a.H >= 0) and np.all(a.G >= 0)


def test_rayleigh_unit_mean_square():
    h2 = np.concatenate([draw_rayleigh(4, 1, s).H.ravel() ** 2 for s in range(25_000)])
    assert h2.size == 100_000
    assert h2.mean() == pytest.approx(1.0, abs=0.02)


def test_channel_pair_validation():
    with pytest.raises(ParameterError):
        ChannelPair(np.ones((2, 1)), np.ones((2, 2)))
    with pytest.raises(DimensionError):
        ChannelPair(np.ones((2, 1)), np.zeros((3, 3)))
    with pytest.raises(ParameterError):
        ChannelPair(np.array([[np.inf], [1.0]]), np.zeros((2, 2)))
    with pytest.raises(DimensionError):
        ChannelPair(np.ones((1, 2)), np.zeros((1, 1)))


def test_arc_zero_length_colocated():
    ch = place_on_arc(GeometryScenario(3, 0.0, 4.0), 1)
    np.testing.assert_allclose(ch.H.ravel(), 1.0)
    off = ch.G[~np.eye(3, dtype=bool)]
    np.testing.assert_array_equal(off, DEFAULT_MAX_GAIN)


@given(st.integers(0, 10_000), st.floats(0.0, math.pi), st.integers(1, 6))
def test_arc_forward_gains_unit(seed, arc, L):
    ch = place_on_arc(GeometryScenario(L, arc, 4.0), seed)
    np.testing.assert_allclose(ch.H.ravel(), 1.0, rtol=1e-12)
    assert ch.M == 1
    assert np.all(np.diag(ch.G) == 0)


def test_antipodal_pair_gain():
    pos = np.array([[1.0, 0.0], [-1.0, 0.0]])
    ch = channel_from_positions(pos, 4.0)
    d = np.hypot(*(pos[0] - pos[1]))
    assert d == 2.0
    assert ch.G[0, 1] == pytest.approx((1 / d ** 4) ** 0.5)
    assert ch.G[0, 1] == pytest.approx(0.25)


def test_geometry_validation():
    with pytest.raises(ParameterError):
        GeometryScenario(2, 4.0)
    with pytest.raises(ParameterError):
        GeometryScenario(2, 1.0, 0.0)


def test_presets():
    ch = preset_scenario("example1", 1.0)
    np.testing.assert_array_equal(ch.H, [[1.0], [1.0]])
    np.testing.assert_array_equal(ch.G, [[0.0, 1.0], [1.0, 0.0]])
    e3 = preset_scenario("example3", 0.3)
    np.testing.assert_array_equal(e3.H, [[1.0], [0.3]])
    np.testing.assert_array_equal(e3.G, 1 - np.eye(2))
    e4 = preset_scenario("example4", 1.0)
    np.testing.assert_array_equal(e4.H, np.ones((2, 2)))
    assert np.linalg.matrix_rank(e4.H) == 1
    assert preset_scenario("example4", 0.5).H[1, 0] == 0.5


def test_example3_zero_gain_starves_noncooperative():
    ch = preset_scenario("example3", 0.0)
    for a in ([1, 1], [1, -1], [2, 1], [1, 3]):
        assert rate_nc(ch.H, 10.0, a) < 0.01


def test_unknown_preset():
    with pytest.raises(ConfigurationError):
        preset_scenario("example2", 1.0)
