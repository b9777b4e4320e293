"""Block-wise ridge orientation from image gradients.

Angles are measured in image coordinates (x to the right, y downward) and
live in [0, pi) because a ridge is an undirected line.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeMismatchError
from .imgio import as_gray
from .preprocess import sobel

MODES = ("standard", "paper")


@dataclass(frozen=True, eq=False)
class GradientField:
    gx: np.ndarray
    gy: np.ndarray

    def __post_init__(self):
        if self.gx.shape != self.gy.shape or self.gx.ndim != 2:
            raise ShapeMismatchError("gx and gy must be 2-D arrays of equal shape")

    @property
    def height(self):
        return self.gx.shape[0]

    @property
    def width(self):
        return self.gx.shape[1]


@dataclass(frozen=True, eq=False)
class BlockMoments:
    """Per-block sums of gx*gx, gx*gy and gy*gy."""
    gxx: np.ndarray
    gxy: np.ndarray
    gyy: np.ndarray

    def __post_init__(self):
        if not (self.gxx.shape == self.gxy.shape == self.gyy.shape) or self.gxx.ndim != 2:
            raise ShapeMismatchError("moment arrays must be 2-D and equally shaped")
        if np.any(self.gxx < 0) or np.any(self.gyy < 0):
            raise ValueError("gxx and gyy must be non-negative")
        # Cauchy-Schwarz up to the rounding of the accumulated sums
        slack = 1e-9 * self.gxx * self.gyy + 1e-300
        if np.any(self.gxy ** 2 > self.gxx * self.gyy + slack):
            raise ValueError("gxy^2 > gxx*gyy: moments are not from a single block of gradients")

    @property
    def rows(self):
        return self.gxx.shape[0]

    @property
    def cols(self):
        return self.gxx.shape[1]


@dataclass(frozen=True, eq=False)
class OrientationField:
    theta: np.ndarray
    coherence: np.ndarray
    block_size: int
    mode: str = "standard"

    def __post_init__(self):
        if self.theta.shape != self.coherence.shape or self.theta.ndim != 2:
            raise ShapeMismatchError("theta and coherence must be 2-D arrays of equal shape")
        if self.mode not in MODES:
            raise ConfigError(f"unknown estimator mode {self.mode!r}")

    @property
    def rows(self):
        return self.theta.shape[0]

    @property
    def cols(self):
        return self.theta.shape[1]

    @property
    def shape(self):
        return self.theta.shape

    def __eq__(self, other):
        # bit-exact comparison; NaN payloads compare by representation
        if not isinstance(other, OrientationField):
            return NotImplemented
        return (self.block_size == other.block_size
                and self.mode == other.mode
                and self.theta.shape == other.theta.shape
                and self.theta.astype("<f8").tobytes() == other.theta.astype("<f8").tobytes()
                and self.coherence.astype("<f8").tobytes() == other.coherence.astype("<f8").tobytes())

    __hash__ = None


def sobel_gradients(img) -> GradientField:
    gx, gy = sobel(as_gray(img))
    return GradientField(gx, gy)


def block_moments(grad: GradientField, block_size: int) -> BlockMoments:
    """Sum the second-order gradient products over non-overlapping N x N blocks.

    Pixels past the last whole block on the bottom and right are dropped.
    """
    n = int(block_size)
    if n < 1:
        raise ConfigError(f"block size must be positive, got {block_size}")
    rows, cols = grad.height // n, grad.width // n
    if rows == 0 or cols == 0:
        raise ConfigError(
            f"{grad.width}x{grad.height} gradient field has no complete {n}x{n} block")

    def per_block(a):
        a = a[:rows * n, :cols * n]
        return a.reshape(rows, n, cols, n).sum(axis=(1, 3))

    gx = np.asarray(grad.gx, dtype=np.float64)
    gy = np.asarray(grad.gy, dtype=np.float64)
    return BlockMoments(per_block(gx * gx), per_block(gx * gy), per_block(gy * gy))


def _wrap(angle):
    out = np.mod(angle, np.pi)
    # mod of a tiny negative number can round up to pi itself
    out[out >= np.pi] = 0.0
    return out


def orientation_field(m: BlockMoments, mode: str = "standard", block_size: int = 16) -> OrientationField:
    """Estimate per-block ridge angle and coherence from block moments.

    ``mode="standard"`` is the least-squares dominant direction,
    ``pi/2 + atan2(2 gxy, gxx - gyy) / 2``. ``mode="paper"`` evaluates
    ``pi/2 + atan(gxy / r) + atan((gxx - gyy) / r)`` with
    ``r = sqrt(gxy^2 + (gxx - gyy)^2)``. Both are wrapped into [0, pi).

    Coherence is ``sqrt((gxx - gyy)^2 + 4 gxy^2) / (gxx + gyy)``, which is 1
    for perfectly unidirectional gradients at any angle. Blocks with
    ``r == 0`` get angle 0 and coherence 0.
    """
    if mode not in MODES:
        raise ConfigError(f"unknown estimator mode {mode!r}")
    gxx, gxy, gyy = m.gxx, m.gxy, m.gyy
    d = gxx - gyy
    r = np.hypot(gxy, d)
    flat = r == 0

    with np.errstate(divide="ignore", invalid="ignore"):
        if mode == "standard":
            theta = np.pi / 2 + 0.5 * np.arctan2(2.0 * gxy, d)
        else:
            theta = np.pi / 2 + np.arctan(gxy / r) + np.arctan(d / r)
        energy = gxx + gyy
        coherence = np.hypot(d, 2.0 * gxy) / energy
    theta = np.where(flat, 0.0, theta)
    theta = _wrap(theta)
    coherence = np.where(flat | (energy <= 0), 0.0, np.clip(coherence, 0.0, 1.0))
    return OrientationField(theta, coherence, int(block_size), mode)


def render_arrows(field: OrientationField, scale: int = 16) -> np.ndarray:
    """Draw one black segment per block on a white canvas.

    Segments are centred in their ``scale x scale`` cell, point along theta
    and have a length proportional to coherence; zero-coherence blocks
    leave a single dot.
    """
    if scale < 8:
        raise ConfigError(f"arrow scale must be >= 8, got {scale}")
    canvas = np.full((field.rows * scale, field.cols * scale), 255, dtype=np.uint8)
    max_half = scale / 2.0 - 1.0
    for i in range(field.rows):
        for j in range(field.cols):
            # integer centres so near-axis angles do not straddle a rounding edge
            cy = i * scale + scale // 2
            cx = j * scale + scale // 2
            half = float(field.coherence[i, j]) * max_half
            t = np.linspace(-half, half, 4 * int(np.ceil(half)) + 1)
            th = float(field.theta[i, j])
            xs = np.floor(cx + t * np.cos(th) + 0.5).astype(int)
            ys = np.floor(cy + t * np.sin(th) + 0.5).astype(int)
            canvas[ys, xs] = 0
    return canvas
