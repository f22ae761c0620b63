"""Median-based comparison denoisers (edge-replicated borders)."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import ValidationError
from .imaging import as_image


def _check_window(window: int, name: str) -> int:
    window = int(window)
    if window < 3 or window % 2 == 0:
        raise ValidationError(f"{name} must be an odd integer >= 3, got {window}")
    return window


def _median(x: np.ndarray, window: int) -> np.ndarray:
    return ndimage.median_filter(x, size=(window, window, 1), mode="nearest")


def median_filter(x, window: int = 3) -> np.ndarray:
    """Replace every pixel by the median of its ``window x window`` neighbourhood."""
    window = _check_window(window, "window")
    return _median(as_image(x), window)


def adaptive_median_filter(x, max_window: int = 7) -> np.ndarray:
    """Adaptive median filter specialised to salt-and-pepper noise.

    Only pixels valued 0 or 255 are candidates.  For each candidate the window
    grows 3, 5, ... until its median is not itself 0 or 255; the pixel takes
    that median.  If ``max_window`` is reached first, the median of the largest
    window is used.
    """
    max_window = _check_window(max_window, "max_window")
    img = as_image(x)
    out = img.copy()
    pending = (img == 0) | (img == 255)
    for w in range(3, max_window + 1, 2):
        if not pending.any():
            break
        med = _median(img, w)
        ok = pending & (med != 0) & (med != 255)
        if w == max_window:
            ok = pending
        out[ok] = med[ok]
        pending &= ~ok
    return out
