import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from _oracles import mse_direct, psnr_direct, ssim_global_direct
from seconv.errors import ShapeError, ValidationError
from seconv.metrics import SsimParams, evaluate, gaussian_window, mse, psnr, ssim, training_loss

u8_pairs = st.tuples(st.integers(2, 12), st.integers(2, 12)).flatmap(
    lambda shape: st.tuples(arrays(np.uint8, shape), arrays(np.uint8, shape))
)


def test_mse_examples():
    a = np.zeros((4, 4))
    assert mse(a, a) == 0
    assert mse(np.full((4, 4), 255), a) == 65025
    assert mse(np.ones((4, 4)), a) == 1


def test_psnr_examples():
    a = np.full((4, 4), 9)
    assert psnr(a, a) == math.inf
    assert psnr(np.full((4, 4), 255), np.zeros((4, 4))) == 0
    assert psnr(np.ones((4, 4)), np.zeros((4, 4))) == pytest.approx(10 * math.log10(65025), abs=1e-12)
    assert psnr(np.ones((4, 4)), np.zeros((4, 4))) == pytest.approx(48.1308, abs=1e-4)


def test_ssim_examples():
    rng = np.random.default_rng(0)
    a = rng.integers(0, 256, (16, 16)).astype(float)
    assert ssim(a, a) == 1.0
    c1 = (0.01 * 255) ** 2
    got = ssim(np.zeros((8, 8)), np.full((8, 8), 255.0))
    assert got == pytest.approx(c1 / (255**2 + c1), rel=1e-12)
    assert got == pytest.approx(1.0e-4, abs=1e-6)


@pytest.mark.parametrize("seed", range(10))
def test_metrics_match_direct_formulas(seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 256, (16, 16)).astype(float)
    b = np.clip(a + rng.normal(0, 30, a.shape), 0, 255).round()
    assert mse(a, b) == pytest.approx(mse_direct(a, b), abs=1e-9)
    assert psnr(a, b) == pytest.approx(psnr_direct(a, b), abs=1e-9)
    assert ssim(a, b) == pytest.approx(ssim_global_direct(a, b), abs=1e-9)


def test_colour_ssim_is_channel_mean():
    rng = np.random.default_rng(1)
    a = rng.integers(0, 256, (10, 10, 3)).astype(float)
    b = rng.integers(0, 256, (10, 10, 3)).astype(float)
    expected = np.mean([ssim_global_direct(a[:, :, k], b[:, :, k]) for k in range(3)])
    assert ssim(a, b) == pytest.approx(expected, abs=1e-12)


def test_windowed_ssim():
    rng = np.random.default_rng(2)
    a = rng.integers(0, 256, (32, 32)).astype(float)
    params = SsimParams(mode="windowed")
    assert ssim(a, a, params) == pytest.approx(1.0, abs=1e-12)
    b = np.clip(a + rng.normal(0, 20, a.shape), 0, 255)
    w = gaussian_window(11, 1.5)
    assert w.sum() == pytest.approx(1.0)
    # One window placed by hand at the top-left valid position.
    pa, pb = a[:11, :11], b[:11, :11]
    mu_a, mu_b = (w * pa).sum(), (w * pb).sum()
    va = (w * pa * pa).sum() - mu_a**2
    vb = (w * pb * pb).sum() - mu_b**2
    cv = (w * pa * pb).sum() - mu_a * mu_b
    c1, c2 = params.c1, params.c2
    first = ((2 * mu_a * mu_b + c1) * (2 * cv + c2)) / ((mu_a**2 + mu_b**2 + c1) * (va + vb + c2))
    small = SsimParams(mode="windowed")
    assert ssim(pa, pb, small) == pytest.approx(first, abs=1e-9)
    with pytest.raises(ShapeError):
        ssim(a[:8, :8], b[:8, :8], params)


def test_params_validation():
    assert SsimParams().c1 == pytest.approx(6.5025)
    assert SsimParams().c2 == pytest.approx(58.5225)
    with pytest.raises(ValidationError):
        SsimParams(mode="fancy")
    with pytest.raises(ValidationError):
        SsimParams(k1=0)


def test_shape_mismatch():
    for fn in (mse, psnr, ssim):
        with pytest.raises(ShapeError):
            fn(np.zeros((3, 3)), np.zeros((3, 4)))


def test_training_loss():
    a = np.zeros((3, 3))
    assert training_loss([a], [a]) == 0
    b = a.copy()
    b[1, 1] = 2
    assert training_loss([b], [a]) == 2
    rng = np.random.default_rng(3)
    preds = [rng.normal(size=(4, 5)) for _ in range(6)]
    targets = [rng.normal(size=(4, 5)) for _ in range(6)]
    direct = math.fsum(float(v) ** 2 for p, t in zip(preds, targets) for v in (p - t).ravel()) / (2 * 6)
    assert training_loss(preds, targets) == pytest.approx(direct, abs=1e-9)
    with pytest.raises(ValidationError):
        training_loss([], [])
    with pytest.raises(ShapeError):
        training_loss([a], [a, a])
    with pytest.raises(ShapeError):
        training_loss([a], [np.zeros((2, 2))])


@settings(max_examples=60, deadline=None)
@given(u8_pairs)
def test_metric_properties(pair):
    a, b = (p.astype(float) for p in pair)
    assert psnr(a, b) == psnr(b, a)
    assert -1.0 <= ssim(a, b) <= 1.0
    n = a.size
    assert training_loss([a], [b]) == pytest.approx(0.5 * n * mse(a, b), rel=1e-12)
    assert (mse(a, b) == 0) == (psnr(a, b) == math.inf)


@settings(max_examples=40, deadline=None)
@given(arrays(np.uint8, (8, 8)), st.integers(-20, 20))
def test_mse_constant_offset(a, delta):
    a = a.astype(float)
    assert mse(a, a + delta) == pytest.approx(delta**2, abs=1e-9)


def test_evaluate_report():
    a = np.full((4, 4), 10.0)
    rep = evaluate(a, a, runtime_ms=3.5)
    assert rep.psnr_db == math.inf and rep.ssim == 1.0 and rep.mse == 0 and rep.runtime_ms == 3.5
