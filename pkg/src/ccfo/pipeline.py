"""Image to orientation-field template: median -> Sobel -> block moments -> angles."""
from dataclasses import dataclass

from .errors import ConfigError
from .imgio import as_gray
from .orientation import MODES, OrientationField, block_moments, orientation_field, sobel_gradients
from .preprocess import MedianConfig, median_filter


@dataclass(frozen=True)
class PipelineConfig:
    block_size: int = 16
    mode: str = "standard"
    median_window: int = 3

    def __post_init__(self):
        if int(self.block_size) != self.block_size or self.block_size < 4:
            raise ConfigError(f"block size must be an integer >= 4, got {self.block_size}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown estimator mode {self.mode!r}")
        MedianConfig(self.median_window)


def extract_field(img, params: PipelineConfig = PipelineConfig()) -> OrientationField:
    img = as_gray(img)
    n = params.block_size
    if img.shape[0] < n or img.shape[1] < n:
        raise ConfigError(
            f"image {img.shape[1]}x{img.shape[0]} is smaller than one {n}x{n} block")
    smooth = median_filter(img, MedianConfig(params.median_window))
    moments = block_moments(sobel_gradients(smooth), n)
    return orientation_field(moments, params.mode, n)
