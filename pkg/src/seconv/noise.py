"""Salt-and-pepper corruption and the 255 -> 0 preprocessing step."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = ["NoiseSpec", "add_sap_noise", "preprocess", "make_rng"]


@dataclass(frozen=True)
class NoiseSpec:
    """Corruption probabilities.

    ``salt_prob`` and ``pepper_prob`` default to an even split of ``density``.
    """

    density: float
    salt_prob: float | None = None
    pepper_prob: float | None = None
    seed: int = 0

    def __post_init__(self):
        d = float(self.density)
        if self.salt_prob is None and self.pepper_prob is None:
            ds = dp = d / 2
        elif self.salt_prob is None:
            dp = float(self.pepper_prob)
            ds = d - dp
        elif self.pepper_prob is None:
            ds = float(self.salt_prob)
            dp = d - ds
        else:
            ds, dp = float(self.salt_prob), float(self.pepper_prob)
        if not 0.0 <= d <= 1.0:
            raise ValidationError(f"density must lie in [0, 1], got {d}")
        if ds < 0 or dp < 0:
            raise ValidationError(f"negative salt/pepper probability ({ds}, {dp})")
        if abs(ds + dp - d) > 1e-12:
            raise ValidationError(f"salt_prob + pepper_prob = {ds + dp} != density {d}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "density", d)
        object.__setattr__(self, "salt_prob", ds)
        object.__setattr__(self, "pepper_prob", dp)
        object.__setattr__(self, "seed", int(self.seed))


def make_rng(seed: int) -> np.random.Generator:
    # Philox is counter based: element i of a draw depends only on (seed, i).
    return np.random.Generator(np.random.Philox(seed))


def add_sap_noise(y: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    """Corrupt every element independently: 0 with ``pepper_prob``, 255 with
    ``salt_prob``, unchanged otherwise.

    One uniform draw per element in row-major order, so channels of a colour
    image are corrupted independently and the result only depends on the seed.
    """
    y = np.asarray(y)
    if y.size and (y.min() < 0 or y.max() > 255):
        raise ValidationError("input must be u8-scale (values in [0, 255])")
    u = make_rng(spec.seed).random(y.shape)
    out = y.copy()
    out[u < spec.pepper_prob] = 0
    out[u >= 1.0 - spec.salt_prob] = 255
    return out


def preprocess(x: np.ndarray) -> np.ndarray:
    """Map salt (255) to 0 so that every noisy pixel is numerically zero."""
    x = np.asarray(x)
    return np.where(x == 255, np.zeros((), dtype=x.dtype), x)
