"""Image tensors, pixel maps and the elementwise/convolution algebra.

Images are plain NumPy arrays shaped ``(H, W, C)`` with ``C`` in ``{1, 3}``.
Arithmetic is always carried out in float64; callers that hold ``uint8`` data
convert with :func:`as_image`.  Clamping back to the 8-bit range is deferred to
serialization (:func:`to_uint8`).

Pixel maps (the noisy map and its complement) are ``uint8`` arrays of 0/1 with
the same shape as the image they describe.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import ShapeError, ValidationError

__all__ = [
    "as_image",
    "to_uint8",
    "noisy_map",
    "complement",
    "hadamard",
    "conv2d_same",
]


def as_image(x, *, dtype=np.float64) -> np.ndarray:
    """Return ``x`` as an ``(H, W, C)`` array.

    2-D input is treated as a single-channel image.
    """
    arr = np.asarray(x, dtype=dtype)
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    if arr.ndim != 3:
        raise ShapeError(f"expected an (H, W) or (H, W, C) array, got shape {arr.shape}")
    if arr.shape[2] not in (1, 3):
        raise ShapeError(f"channel count must be 1 or 3, got {arr.shape[2]}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"empty image of shape {arr.shape}")
    return arr


def to_uint8(x: np.ndarray) -> np.ndarray:
    """Round and clamp a u8-scale float image to ``uint8``."""
    return np.clip(np.rint(x), 0, 255).astype(np.uint8)


def noisy_map(x: np.ndarray) -> np.ndarray:
    """1 where the (preprocessed) image is zero, else 0."""
    return (np.asarray(x) == 0).astype(np.uint8)


def complement(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m)
    if m.size and not np.isin(m, (0, 1)).all():
        raise ValidationError("pixel map must contain only 0 and 1")
    return (1 - m).astype(np.uint8)


def hadamard(a, b) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ShapeError(f"incompatible operands: {a.shape} vs {b.shape}")
    return a * b


def conv2d_same(x, w, per_channel: bool = True) -> np.ndarray:
    """Stride-1, zero-padded ("same") true convolution with an odd square kernel.

    With ``per_channel`` set, every channel of an ``(H, W, C)`` input is
    convolved independently with the same 2-D kernel.  Without it the input
    must be 2-D (or single channel) and the kernel is applied to that plane.
    The kernel is flipped, i.e. ``out[i, j] = sum x[l, m] * w[i - l, j - m]``.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValidationError(f"kernel must be square 2-D, got shape {w.shape}")
    if w.shape[0] % 2 == 0:
        raise ValidationError(f"kernel size must be odd, got {w.shape[0]}")

    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        return ndimage.convolve(x, w, mode="constant", cval=0.0)
    if x.ndim != 3:
        raise ShapeError(f"expected a 2-D or 3-D input, got shape {x.shape}")
    if not per_channel and x.shape[2] != 1:
        raise ValidationError("cross-channel convolution needs a 3-D kernel; use per_channel=True")
    out = np.empty_like(x)
    for k in range(x.shape[2]):
        out[:, :, k] = ndimage.convolve(x[:, :, k], w, mode="constant", cval=0.0)
    return out
