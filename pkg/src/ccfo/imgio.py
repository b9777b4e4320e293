"""Binary PGM/PPM reading and writing.

Images are plain 2-D ``uint8`` numpy arrays (rows = height, cols = width).
"""
import os

import numpy as np

from .errors import (
    InvalidImageError,
    TruncatedImageError,
    UnsupportedMagicError,
    UnsupportedMaxvalError,
)

MIN_SIDE = 3
_WHITESPACE = b" \t\r\n\v\f"


def as_gray(img) -> np.ndarray:
    """Validate ``img`` as a grayscale image and return it as a uint8 array."""
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise InvalidImageError(f"expected a 2-D image, got shape {arr.shape}")
    h, w = arr.shape
    if h < MIN_SIDE or w < MIN_SIDE:
        raise InvalidImageError(f"image {w}x{h} is smaller than {MIN_SIDE}x{MIN_SIDE}")
    if arr.dtype != np.uint8:
        if not np.all(np.isfinite(arr)) or arr.min() < 0 or arr.max() > 255:
            raise InvalidImageError("samples must lie in [0, 255]")
        if not np.array_equal(arr, np.round(arr)):
            raise InvalidImageError("samples must be integral")
        arr = arr.astype(np.uint8)
    return arr


def _read_header(data: bytes):
    """Parse magic, width, height, maxval; return them and the payload offset."""
    tokens = []
    pos = 2
    n = len(data)
    while len(tokens) < 3:
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
            raise TruncatedImageError("truncated header")
        tok = data[start:pos]
        if not tok.isdigit():
            raise TruncatedImageError(f"malformed header field {tok!r}")
        tokens.append(int(tok))
    if pos >= n or data[pos] not in _WHITESPACE:
        raise TruncatedImageError("missing whitespace after maxval")
    return tokens[0], tokens[1], tokens[2], pos + 1


def luminance(rgb: np.ndarray) -> np.ndarray:
    """BT.601 luma of an (..., 3) uint8 array, rounded half-up to uint8."""
    rgb = np.asarray(rgb, dtype=np.int64)
    # integer weights keep the half-up rounding exact
    y = (299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2] + 500) // 1000
    return y.astype(np.uint8)


def load_image(path) -> np.ndarray:
    """Load a binary PGM (P5) or PPM (P6) file as a grayscale uint8 array.

    PPM pixels are reduced to luminance with BT.601 weights. Raises
    ``OSError`` for unreadable files and an :class:`ImageFormatError`
    subclass for unsupported or damaged content.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise UnsupportedMagicError(f"unsupported magic number {magic!r} in {path}")
    width, height, maxval, offset = _read_header(data)
    if maxval != 255:
        raise UnsupportedMaxvalError(f"unsupported maxval {maxval} in {path}")
    channels = 3 if magic == b"P6" else 1
    need = width * height * channels
    payload = data[offset:offset + need]
    if len(payload) < need:
        raise TruncatedImageError(
            f"truncated payload in {path}: expected {need} bytes, got {len(payload)}")
    arr = np.frombuffer(payload, dtype=np.uint8)
    if channels == 3:
        img = luminance(arr.reshape(height, width, 3))
    else:
        img = arr.reshape(height, width).copy()
    return as_gray(img)


def encode_pgm(img) -> bytes:
    """P5 bytes for any 2-D uint8 array; size limits are enforced by save_image."""
    img = np.asarray(img)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise InvalidImageError("P5 encoding needs a 2-D uint8 array")
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(img).tobytes()


def save_image(img, path) -> None:
    """Write ``img`` as a binary P5 file. The parent directory must exist."""
    blob = encode_pgm(as_gray(img))
    parent = os.path.dirname(os.fspath(path))
    if parent and not os.path.isdir(parent):
        raise FileNotFoundError(f"destination directory does not exist: {parent}")
    with open(path, "wb") as fh:
        fh.write(blob)
