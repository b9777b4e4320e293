"""Fingerprint matching by cross-correlating block ridge-orientation fields."""
from .errors import CCFOError
from .gallery import Gallery, GalleryRecord, enroll, identify, load_gallery, save_gallery, verify
from .imgio import load_image, save_image
from .matcher import (
    MatchConfig,
    MatchResult,
    coherence_score,
    correlate_fft,
    correlate_product,
    decide,
    match,
)
from .orientation import OrientationField, block_moments, orientation_field, render_arrows, sobel_gradients
from .pipeline import PipelineConfig, extract_field
from .preprocess import CannyConfig, MedianConfig, canny_edges, median_filter

__version__ = "0.1.0"
