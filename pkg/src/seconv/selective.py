"""Selective convolution blocks and the ascending-size cascade.

A block restores zero-valued (noisy) pixels of a preprocessed image with a
normalized weighted mean of the non-zero pixels in an ``s x s`` window, but
only where the window holds at least ``eta`` non-noisy pixels.  Non-noisy
pixels are never modified.  Seven blocks of sizes 3..15 run in ascending
order; what is left afterwards is handled by a finalize policy.
"""

from __future__ import annotations

import configparser
import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import UnrestorableImageError, ValidationError
from .imaging import as_image, complement, conv2d_same, noisy_map
from .noise import preprocess

log = logging.getLogger(__name__)

DEFAULT_SIZES = (3, 5, 7, 9, 11, 13, 15)


class Finalize(str, enum.Enum):
    LEAVE = "leave"
    REPEAT_LAST = "repeat_last"
    GLOBAL_MEAN_FILL = "global_mean_fill"


def default_eta(size: int) -> int:
    return max(1, size - 2)


def ones_kernel(size: int) -> np.ndarray:
    return np.ones((size, size))


def inverse_distance_kernel(size: int) -> np.ndarray:
    """1 / Euclidean distance from the centre; the centre gets weight 1.

    The centre weight never matters for restoration since the pixel being
    restored is itself noisy and excluded.
    """
    r = size // 2
    yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
    d = np.hypot(yy, xx)
    d[r, r] = 1.0
    return 1.0 / d


KERNELS = {"ones": ones_kernel, "inverse_distance": inverse_distance_kernel}


@dataclass(frozen=True)
class SeConvBlockSpec:
    size: int
    kernel: np.ndarray = field(default=None, repr=False)
    eta: int | None = None

    def __post_init__(self):
        s = int(self.size)
        if s < 3 or s % 2 == 0:
            raise ValidationError(f"block size must be odd and >= 3, got {s}")
        kernel = ones_kernel(s) if self.kernel is None else np.asarray(self.kernel, dtype=np.float64)
        if kernel.shape != (s, s):
            raise ValidationError(f"kernel for block {s} has shape {kernel.shape}")
        eta = default_eta(s) if self.eta is None else int(self.eta)
        if eta < 1:
            raise ValidationError(f"eta must be a positive integer, got {eta}")
        object.__setattr__(self, "size", s)
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "eta", eta)


@dataclass(frozen=True)
class CascadeSpec:
    blocks: tuple[SeConvBlockSpec, ...]
    finalize: Finalize = Finalize.REPEAT_LAST

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise ValidationError("a cascade needs at least one block")
        sizes = [b.size for b in blocks]
        if any(a >= b for a, b in zip(sizes, sizes[1:])):
            raise ValidationError(f"block sizes must be strictly ascending, got {sizes}")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "finalize", Finalize(self.finalize))

    @classmethod
    def default(cls, kernel: str = "ones", finalize=Finalize.REPEAT_LAST, sizes=DEFAULT_SIZES):
        make = KERNELS[kernel]
        return cls(tuple(SeConvBlockSpec(s, make(s)) for s in sizes), finalize)

    @classmethod
    def from_config(cls, text: str) -> CascadeSpec:
        """Parse a ``key = value`` cascade description.

        Recognised keys: ``sizes`` (comma separated), ``kernel``
        (``ones`` | ``inverse_distance``), ``eta`` (``auto`` for
        ``max(1, s - 2)``, an integer, or a comma list matching ``sizes``),
        ``finalize``.  Lines starting with ``#`` are comments.
        """
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            parser.read_string("[cascade]\n" + text)
        except configparser.Error as exc:
            raise ValidationError(f"bad cascade config: {exc}") from None
        sec = parser["cascade"]
        unknown = set(sec) - {"sizes", "kernel", "eta", "finalize"}
        if unknown:
            raise ValidationError(f"unknown cascade config keys: {sorted(unknown)}")
        try:
            sizes = [int(v) for v in sec.get("sizes", ",".join(map(str, DEFAULT_SIZES))).split(",")]
        except ValueError:
            raise ValidationError("sizes must be a comma-separated list of integers") from None
        kernel = sec.get("kernel", "ones").strip()
        if kernel not in KERNELS:
            raise ValidationError(f"unknown kernel {kernel!r}; choose from {sorted(KERNELS)}")
        eta_raw = sec.get("eta", "auto").strip()
        if eta_raw == "auto":
            etas = [None] * len(sizes)
        else:
            try:
                etas = [int(v) for v in eta_raw.split(",")]
            except ValueError:
                raise ValidationError(f"bad eta value {eta_raw!r}") from None
            if len(etas) == 1:
                etas = etas * len(sizes)
            elif len(etas) != len(sizes):
                raise ValidationError("eta list length must match sizes")
        try:
            finalize = Finalize(sec.get("finalize", Finalize.REPEAT_LAST.value).strip())
        except ValueError:
            raise ValidationError(f"unknown finalize policy {sec.get('finalize')!r}") from None
        blocks = tuple(SeConvBlockSpec(s, KERNELS[kernel](s), e) for s, e in zip(sizes, etas))
        return cls(blocks, finalize)


@dataclass(frozen=True)
class RestorationState:
    """Partially restored image and the pixels that are still noisy."""

    image: np.ndarray
    noisy: np.ndarray
    restored_count: int = 0

    @classmethod
    def start(cls, x_pre: np.ndarray) -> RestorationState:
        x = as_image(x_pre)
        return cls(x, noisy_map(x), 0)


def selective_conv(x: np.ndarray, m_tilde: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Weighted mean of the non-noisy pixels under ``w``, per channel.

    ``conv(x, w) / conv(m_tilde, w)`` where the denominator is non-zero, else 0.
    """
    num = conv2d_same(x, w)
    den = conv2d_same(m_tilde.astype(np.float64), w)
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den != 0)
    return out


def reliability(m_tilde: np.ndarray, size: int, eta: int) -> np.ndarray:
    """1 where the ``size x size`` window holds at least ``eta`` clean pixels.

    Out-of-image positions count as noisy.
    """
    counts = conv2d_same(m_tilde.astype(np.float64), ones_kernel(size))
    return (counts >= eta).astype(np.uint8)


def apply_block(state: RestorationState, block: SeConvBlockSpec) -> RestorationState:
    """Restore every reliable noisy pixel at once from the block's input."""
    x = state.image
    m = state.noisy
    m_tilde = complement(m)
    s = selective_conv(x, m_tilde, block.kernel)
    r = reliability(m_tilde, block.size, block.eta)
    x_hat = x + s * m * r
    new_noisy = noisy_map(x_hat)
    restored = int(m.sum()) - int(new_noisy.sum())
    return RestorationState(x_hat, new_noisy, state.restored_count + restored)


def _mean_fill(state: RestorationState) -> RestorationState:
    x, m = state.image, state.noisy
    if not m.any():
        return state
    clean = m == 0
    if not clean.any():
        raise UnrestorableImageError("image has no non-noisy pixels to restore from")
    out = x.copy()
    overall = x[clean].mean()
    for k in range(x.shape[2]):
        ck = clean[:, :, k]
        fill = x[:, :, k][ck].mean() if ck.any() else overall
        out[:, :, k][m[:, :, k] == 1] = fill
    left = noisy_map(out)
    return RestorationState(out, left, state.restored_count + int(m.sum()) - int(left.sum()))


def run_cascade(x_pre: np.ndarray, spec: CascadeSpec) -> tuple[RestorationState, list[tuple[str, int]]]:
    """Run a cascade on an already preprocessed image.

    Returns the final state plus ``(stage, restored_pixels)`` per stage.
    """
    state = RestorationState.start(x_pre)
    stages = []
    for block in spec.blocks:
        before = state.restored_count
        if state.noisy.any():
            state = apply_block(state, block)
        stages.append((f"block-{block.size}", state.restored_count - before))

    if spec.finalize is Finalize.REPEAT_LAST:
        last = spec.blocks[-1]
        passes = 0
        while state.noisy.any():
            before = state.restored_count
            state = apply_block(state, last)
            if state.restored_count == before:
                break
            passes += 1
            stages.append((f"repeat-{last.size}#{passes}", state.restored_count - before))
    if spec.finalize in (Finalize.REPEAT_LAST, Finalize.GLOBAL_MEAN_FILL) and state.noisy.any():
        before = state.restored_count
        state = _mean_fill(state)
        stages.append(("mean-fill", state.restored_count - before))
    for name, n in stages:
        log.debug("%s restored %d pixels", name, n)
    return state, stages


def cascade_denoise(x_noisy: np.ndarray, spec: CascadeSpec | None = None) -> np.ndarray:
    """Denoise a raw u8-scale noisy image; returns a float64 ``(H, W, C)`` array."""
    spec = CascadeSpec.default() if spec is None else spec
    state, _ = run_cascade(preprocess(as_image(x_noisy)), spec)
    return state.image
