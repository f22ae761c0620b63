"""MSE, PSNR, SSIM and the patch-batch training loss, as plain evaluators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ShapeError, ValidationError
from .imaging import as_image

PEAK = 255.0


@dataclass(frozen=True)
class SsimParams:
    k1: float = 0.01
    k2: float = 0.03
    L: float = 255.0
    mode: str = "global"  # "global" | "windowed"
    window_size: int = 11
    gaussian_sigma: float = 1.5

    def __post_init__(self):
        if self.mode not in ("global", "windowed"):
            raise ValidationError(f"unknown SSIM mode {self.mode!r}")
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValidationError("k1, k2 and L must give positive stabilizers")
        if self.window_size < 1 or self.window_size % 2 == 0:
            raise ValidationError("window_size must be a positive odd integer")

    @property
    def c1(self) -> float:
        return (self.k1 * self.L) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.L) ** 2


@dataclass(frozen=True)
class MetricReport:
    psnr_db: float
    ssim: float
    mse: float
    runtime_ms: float = 0.0


def _pair(xhat, y) -> tuple[np.ndarray, np.ndarray]:
    a = as_image(xhat)
    b = as_image(y)
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def mse(xhat, y) -> float:
    a, b = _pair(xhat, y)
    return float(np.mean((a - b) ** 2))


def psnr(xhat, y) -> float:
    """PSNR in dB with a fixed peak of 255; ``math.inf`` for identical images."""
    err = mse(xhat, y)
    if err == 0:
        return math.inf
    return 10.0 * math.log10(PEAK**2 / err)


def _ssim_global(a: np.ndarray, b: np.ndarray, c1: float, c2: float) -> float:
    mu_a = a.mean()
    mu_b = b.mean()
    da = a - mu_a
    db = b - mu_b
    var_a = np.mean(da * da)
    var_b = np.mean(db * db)
    cov = np.mean(da * db)
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(num / den)


def gaussian_window(size: int, sigma: float) -> np.ndarray:
    r = size // 2
    g = np.exp(-(np.arange(-r, r + 1) ** 2) / (2 * sigma**2))
    w = np.outer(g, g)
    return w / w.sum()


def _ssim_windowed(a: np.ndarray, b: np.ndarray, params: SsimParams) -> float:
    w = gaussian_window(params.window_size, params.gaussian_sigma)
    r = params.window_size // 2
    if a.shape[0] <= 2 * r or a.shape[1] <= 2 * r:
        raise ShapeError(f"image {a.shape} smaller than the {params.window_size}x{params.window_size} window")

    def filt(z):
        return ndimage.correlate(z, w, mode="constant")[r:-r or None, r:-r or None]

    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a**2
    var_b = filt(b * b) - mu_b**2
    cov = filt(a * b) - mu_a * mu_b
    c1, c2 = params.c1, params.c2
    smap = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / ((mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2))
    return float(smap.mean())


def ssim(xhat, y, params: SsimParams | None = None) -> float:
    """SSIM averaged over channels.

    ``mode="global"`` evaluates the index once with whole-image statistics;
    ``mode="windowed"`` averages it over Gaussian-weighted sliding windows
    (valid region only).
    """
    params = params or SsimParams()
    a, b = _pair(xhat, y)
    vals = []
    for k in range(a.shape[2]):
        ak, bk = a[:, :, k], b[:, :, k]
        if params.mode == "global":
            vals.append(_ssim_global(ak, bk, params.c1, params.c2))
        else:
            vals.append(_ssim_windowed(ak, bk, params))
    return float(np.mean(vals))


def training_loss(pred_batch, target_batch) -> float:
    """Half the summed squared error over the batch, divided by batch size."""
    preds = list(pred_batch)
    targets = list(target_batch)
    if not preds:
        raise ValidationError("empty batch")
    if len(preds) != len(targets):
        raise ShapeError(f"batch sizes differ: {len(preds)} vs {len(targets)}")
    total = 0.0
    for p, t in zip(preds, targets):
        a, b = _pair(p, t)
        total += float(np.sum((a - b) ** 2))
    return total / (2 * len(preds))


def evaluate(xhat, y, params: SsimParams | None = None, runtime_ms: float = 0.0) -> MetricReport:
    return MetricReport(psnr(xhat, y), ssim(xhat, y, params), mse(xhat, y), runtime_ms)
