import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from seconv.baselines import adaptive_median_filter, median_filter
from seconv.errors import ValidationError
from seconv.metrics import psnr
from seconv.noise import NoiseSpec, add_sap_noise


def test_median_of_one_to_nine():
    x = np.arange(1, 10, dtype=float).reshape(3, 3)
    assert median_filter(x, 3)[1, 1, 0] == 5


def test_constant_and_single_salt():
    x = np.full((7, 7), 100.0)
    np.testing.assert_array_equal(median_filter(x, 3)[:, :, 0], x)
    x[3, 3] = 255
    assert median_filter(x, 3)[3, 3, 0] == 100


def test_edge_replication():
    # With zero padding the corner median would be 0.
    x = np.full((5, 5), 50.0)
    assert median_filter(x, 5)[0, 0, 0] == 50


def test_even_windows_rejected():
    with pytest.raises(ValidationError):
        median_filter(np.ones((5, 5)), 4)
    with pytest.raises(ValidationError):
        adaptive_median_filter(np.ones((5, 5)), 6)


def test_amf_examples():
    rng = np.random.default_rng(0)
    x = rng.integers(1, 255, (16, 16)).astype(float)
    np.testing.assert_array_equal(adaptive_median_filter(x, 7)[:, :, 0], x)
    y = np.full((9, 9), 100.0)
    y[4, 4] = 0
    assert adaptive_median_filter(y, 3)[4, 4, 0] == 100


def test_amf_grows_window():
    y = np.full((11, 11), 100.0)
    y[4:7, 4:7] = 0  # 3x3 pepper block: the centre needs a 5x5 window
    assert adaptive_median_filter(y, 5)[5, 5, 0] == 100
    assert adaptive_median_filter(y, 3)[5, 5, 0] == 0


def test_amf_beats_noisy_at_90_percent():
    yy, xx = np.mgrid[0:64, 0:64]
    clean = (40 + 2 * xx + yy).astype(np.uint8)[:, :, None]
    noisy = add_sap_noise(clean, NoiseSpec(0.9, seed=1))
    assert psnr(adaptive_median_filter(noisy, 11), clean) > psnr(noisy, clean)


@settings(max_examples=40, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(3, 10), st.integers(3, 10))), st.sampled_from([3, 5]))
def test_median_values_come_from_the_window(x, w):
    out = median_filter(x, w)[:, :, 0]
    r = w // 2
    padded = np.pad(x, r, mode="edge")
    for i in range(x.shape[0]):
        for j in range(x.shape[1]):
            window = padded[i : i + w, j : j + w].ravel()
            assert out[i, j] == np.sort(window)[window.size // 2]


@settings(max_examples=40, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(3, 12), st.integers(3, 12), st.sampled_from([1, 3]))))
def test_amf_only_touches_extremes(x):
    out = adaptive_median_filter(x, 5)
    keep = (x != 0) & (x != 255)
    np.testing.assert_array_equal(out[keep], x[keep])
