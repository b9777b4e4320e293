"""Median smoothing and a Canny edge map for diagnostics."""
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from .errors import ConfigError
from .imgio import as_gray


@dataclass(frozen=True)
class MedianConfig:
    window: int = 3

    def __post_init__(self):
        if int(self.window) != self.window or self.window < 3 or self.window % 2 == 0:
            raise ConfigError(f"median window must be an odd integer >= 3, got {self.window}")


@dataclass(frozen=True)
class CannyConfig:
    low_frac: float = 0.1
    high_frac: float = 0.3

    def __post_init__(self):
        if not 0.0 < self.low_frac < self.high_frac < 1.0:
            raise ConfigError(
                f"need 0 < low_frac < high_frac < 1, got {self.low_frac}, {self.high_frac}")


def median_filter(img, cfg: MedianConfig = MedianConfig()) -> np.ndarray:
    """Exact w x w median under replicate padding; output has the input's shape."""
    img = as_gray(img)
    w = cfg.window
    if w > min(img.shape):
        raise ConfigError(f"median window {w} larger than image {img.shape[1]}x{img.shape[0]}")
    r = w // 2
    padded = np.pad(img, r, mode="edge")
    windows = sliding_window_view(padded, (w, w)).reshape(img.shape + (w * w,))
    k = (w * w - 1) // 2
    return np.partition(windows, k, axis=-1)[..., k].copy()


def sobel(img) -> tuple[np.ndarray, np.ndarray]:
    """3x3 Sobel responses (gx, gy) as float64 with replicate borders.

    gx grows with intensity increasing to the right, gy with intensity
    increasing downward.
    """
    a = np.pad(np.asarray(img, dtype=np.float64), 1, mode="edge")
    # rows above / at / below, columns left / center / right
    tl, tc, tr = a[:-2, :-2], a[:-2, 1:-1], a[:-2, 2:]
    ml, mr = a[1:-1, :-2], a[1:-1, 2:]
    bl, bc, br = a[2:, :-2], a[2:, 1:-1], a[2:, 2:]
    gx = (tr - tl) + 2.0 * (mr - ml) + (br - bl)
    gy = (bl - tl) + 2.0 * (bc - tc) + (br - tr)
    return gx, gy


# neighbour offsets per quantized gradient direction: 0, 45, 90, 135 degrees
_NMS_OFFSETS = ((0, 1), (1, 1), (1, 0), (1, -1))


def _non_max_suppression(mag, gx, gy):
    h, w = mag.shape
    ang = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    sector = np.zeros(mag.shape, dtype=np.int8)
    sector[(ang >= 22.5) & (ang < 67.5)] = 1
    sector[(ang >= 67.5) & (ang < 112.5)] = 2
    sector[(ang >= 112.5) & (ang < 157.5)] = 3

    p = np.pad(mag, 1, mode="constant")
    out = np.zeros_like(mag)
    for s, (dr, dc) in enumerate(_NMS_OFFSETS):
        fwd = p[1 + dr:1 + dr + h, 1 + dc:1 + dc + w]
        back = p[1 - dr:1 - dr + h, 1 - dc:1 - dc + w]
        # strict on the forward side so plateaus two pixels wide keep one pixel
        keep = (sector == s) & (mag > fwd) & (mag >= back)
        out[keep] = mag[keep]
    return out


def canny_edges(img, cfg: CannyConfig = CannyConfig()) -> np.ndarray:
    """Binary (0/255) edge map.

    Sobel magnitude, non-maximum suppression over four direction sectors,
    then hysteresis with thresholds ``low_frac * M`` and ``high_frac * M``
    where ``M`` is the maximum magnitude. Weak pixels survive when they are
    8-connected to a strong one. The input is expected to be smoothed
    already; no Gaussian blur is applied here.
    """
    img = as_gray(img)
    gx, gy = sobel(img)
    mag = np.hypot(gx, gy)
    peak = mag.max()
    if peak == 0:
        return np.zeros(img.shape, dtype=np.uint8)
    thin = _non_max_suppression(mag, gx, gy)
    weak = thin >= cfg.low_frac * peak
    strong = thin >= cfg.high_frac * peak
    labels, n = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    if n == 0:
        return np.zeros(img.shape, dtype=np.uint8)
    keep = np.zeros(n + 1, dtype=bool)
    keep[np.unique(labels[strong])] = True
    keep[0] = False
    return np.where(keep[labels], 255, 0).astype(np.uint8)
