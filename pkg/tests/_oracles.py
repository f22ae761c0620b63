"""Slow, direct-formula reference implementations used as test oracles.

Nothing here imports the package's numeric code.
"""

import math

import numpy as np


def selective_direct(x, w):
    """Direct-sum weighted mean over non-zero neighbours (per channel).

    S[i,j,k] = sum_{l,m} x[l,m,k] w[i-l, j-m] / sum_{l,m: x[l,m,k] != 0} w[i-l, j-m],
    0 when the denominator vanishes.  Out-of-image positions contribute nothing.
    """
    h, wd, c = x.shape
    s = w.shape[0]
    r = s // 2
    out = np.zeros((h, wd, c))
    for k in range(c):
        for i in range(h):
            for j in range(wd):
                num = 0.0
                den = 0.0
                for l in range(max(0, i - r), min(h, i + r + 1)):
                    for m in range(max(0, j - r), min(wd, j + r + 1)):
                        weight = w[i - l + r, j - m + r]
                        num += x[l, m, k] * weight
                        if x[l, m, k] != 0:
                            den += weight
                out[i, j, k] = num / den if den != 0 else 0.0
    return out


def clean_count_direct(x, s):
    h, wd, c = x.shape
    r = s // 2
    out = np.zeros(x.shape, dtype=int)
    for k in range(c):
        for i in range(h):
            for j in range(wd):
                out[i, j, k] = sum(
                    1
                    for l in range(max(0, i - r), min(h, i + r + 1))
                    for m in range(max(0, j - r), min(wd, j + r + 1))
                    if x[l, m, k] != 0
                )
    return out


def mse_direct(a, b):
    a = np.asarray(a, dtype=float).ravel().tolist()
    b = np.asarray(b, dtype=float).ravel().tolist()
    return math.fsum((p - q) ** 2 for p, q in zip(a, b)) / len(a)


def psnr_direct(a, b):
    e = mse_direct(a, b)
    return math.inf if e == 0 else 10 * math.log10(255.0**2 / e)


def ssim_global_direct(a, b, k1=0.01, k2=0.03, L=255.0):
    """Whole-image SSIM of one plane using population statistics."""
    a = np.asarray(a, dtype=float).ravel().tolist()
    b = np.asarray(b, dtype=float).ravel().tolist()
    n = len(a)
    mu_a = math.fsum(a) / n
    mu_b = math.fsum(b) / n
    var_a = math.fsum((p - mu_a) ** 2 for p in a) / n
    var_b = math.fsum((q - mu_b) ** 2 for q in b) / n
    cov = math.fsum((p - mu_a) * (q - mu_b) for p, q in zip(a, b)) / n
    c1 = (k1 * L) ** 2
    c2 = (k2 * L) ** 2
    return ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / ((mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2))


def network_direct(layers, x_u8):
    """Scalar-loop evaluation of a conv/BN/ReLU graph with masked output.

    ``layers`` is a list of ("conv", W, b) / ("bn", gamma, beta, mean, var, eps) /
    ("relu",) tuples; convs are same-padded cross-correlations.
    """
    x = np.array(x_u8, dtype=float)
    x[x == 255] = 0
    m = (x == 0).astype(float)
    h = x / 255.0
    H, W, _ = h.shape
    for layer in layers:
        if layer[0] == "conv":
            _, wt, bias = layer
            out_c, in_c, kh, kw = wt.shape
            nxt = np.zeros((H, W, out_c))
            for o in range(out_c):
                for i in range(H):
                    for j in range(W):
                        acc = 0.0 if bias is None else bias[o]
                        for c in range(in_c):
                            for dy in range(kh):
                                for dx in range(kw):
                                    yy, xx = i + dy - kh // 2, j + dx - kw // 2
                                    if 0 <= yy < H and 0 <= xx < W:
                                        acc += h[yy, xx, c] * wt[o, c, dy, dx]
                        nxt[i, j, o] = acc
            h = nxt
        elif layer[0] == "bn":
            _, g, be, mu, var, eps = layer
            nxt = np.empty_like(h)
            for i in range(H):
                for j in range(W):
                    for c in range(h.shape[2]):
                        nxt[i, j, c] = g[c] * (h[i, j, c] - mu[c]) / math.sqrt(var[c] + eps) + be[c]
            h = nxt
        elif layer[0] == "relu":
            h = np.where(h > 0, h, 0.0)
    return x + h * 255.0 * m
