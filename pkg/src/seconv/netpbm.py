"""Binary PGM (P5) / PPM (P6) reading and writing, 8-bit only.

PNG files are read through Pillow when it is installed.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .errors import ImageFormatError
from .imaging import to_uint8

_WHITESPACE = b" \t\r\n\v\f"


def _tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Pull ``count`` header tokens, skipping ``#`` comments.

    Returns the tokens and the offset of the single whitespace byte that
    terminates the last one.
    """
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos] in _WHITESPACE:
            pos += 1
        if pos < n and data[pos] == ord("#"):
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < n and data[pos] not in _WHITESPACE and data[pos] != ord("#"):
            pos += 1
        if start == pos:
            raise ImageFormatError("truncated header")
        tokens.append(data[start:pos])
    if pos >= n:
        raise ImageFormatError("header not terminated")
    return tokens, pos


def decode(data: bytes) -> np.ndarray:
    """Decode a P5/P6 byte string to a ``uint8`` array shaped ``(H, W, C)``."""
    (magic, w, h, maxval), pos = _tokens(data, 4)
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise ImageFormatError(f"unsupported magic {magic!r}; only P5 and P6 are read")
    try:
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise ImageFormatError("non-integer header field") from None
    if width <= 0 or height <= 0:
        raise ImageFormatError(f"bad dimensions {width}x{height}")
    if maxval != 255:
        raise ImageFormatError(f"only maxval 255 is supported, got {maxval}")
    start = pos + 1
    expected = width * height * channels
    payload = data[start : start + expected]
    if len(payload) != expected:
        raise ImageFormatError(f"expected {expected} pixel bytes, found {len(payload)}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width, channels).copy()


def encode(image: np.ndarray) -> bytes:
    img = np.asarray(image)
    if img.ndim == 2:
        img = img[:, :, np.newaxis]
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ImageFormatError(f"cannot encode array of shape {img.shape}")
    if img.dtype != np.uint8:
        img = to_uint8(img)
    magic = "P5" if img.shape[2] == 1 else "P6"
    header = f"{magic}\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(img).tobytes()


def read_image(path: str | os.PathLike) -> np.ndarray:
    """Read an image file into a ``uint8`` ``(H, W, C)`` array."""
    path = Path(path)
    data = path.read_bytes()
    if data[:2] in (b"P5", b"P6"):
        return decode(data)
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        return _read_png(path)
    raise ImageFormatError(f"{path}: not a P5/P6 or PNG file")


def _read_png(path: Path) -> np.ndarray:
    try:
        from PIL import Image
    except ImportError:
        raise ImageFormatError("PNG support requires Pillow") from None
    with Image.open(path) as im:
        if im.mode in ("L", "1", "P") and not (im.mode == "P" and "transparency" in im.info):
            arr = np.asarray(im.convert("L"))
        else:
            arr = np.asarray(im.convert("RGB"))
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    return arr.astype(np.uint8)


def write_image(path: str | os.PathLike, image: np.ndarray) -> None:
    """Write P5 for single-channel and P6 for RGB images.

    Float input is rounded and clamped to [0, 255] first.
    """
    Path(path).write_bytes(encode(image))
