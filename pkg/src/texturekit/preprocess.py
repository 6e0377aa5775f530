"""Intensity normalization, bilateral denoising and gray-level quantization.

Images are 2-D ``float64`` arrays (rows x columns). After
:func:`normalize_intensity` every value lies in ``[0, 1]``; quantized images
are integer arrays of level indices in ``{0, ..., n_levels - 1}``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DataValidationError, ParameterError

DEFAULT_TOP_FRACTION = 0.001
DEFAULT_SIGMA_SPATIAL = 2.0
DEFAULT_SIGMA_RANGE = 0.1
DEFAULT_LEVELS = 16


@dataclass(frozen=True)
class PreprocessConfig:
    top_fraction: float = DEFAULT_TOP_FRACTION
    sigma_spatial: float = DEFAULT_SIGMA_SPATIAL
    sigma_range: float = DEFAULT_SIGMA_RANGE
    radius: int | None = None
    levels: int = DEFAULT_LEVELS
    denoise: bool = True

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PreprocessConfig":
        return cls(**d)


def _as_image(img) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise DataValidationError(f"expected a non-empty 2-D grayscale image, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataValidationError("image contains non-finite intensities")
    return arr


def normalize_intensity(img, top_fraction: float = DEFAULT_TOP_FRACTION) -> np.ndarray:
    """Scale by the mean of the brightest pixels and clip to ``[0, 1]``.

    The reference ``R`` is the mean of the ``k = max(1, ceil(top_fraction * n))``
    largest values, which makes a handful of hot pixels less influential than
    normalizing by the plain maximum.
    """
    if not (0.0 < top_fraction <= 1.0):
        raise ParameterError(f"top_fraction must be in (0, 1], got {top_fraction}")
    arr = _as_image(img)
    if np.any(arr < 0):
        raise DataValidationError("raw intensities must be nonnegative")
    flat = arr.ravel()
    k = max(1, math.ceil(top_fraction * flat.size))
    top = np.partition(flat, flat.size - k)[flat.size - k:]
    ref = float(top.mean())
    if ref <= 0.0:
        raise DataValidationError("degenerate image (zero reference)")
    return np.minimum(arr / ref, 1.0)


def default_radius(sigma_spatial: float) -> int:
    return 2 * math.ceil(sigma_spatial)


def bilateral_filter(img, sigma_spatial: float = DEFAULT_SIGMA_SPATIAL,
                     sigma_range: float = DEFAULT_SIGMA_RANGE,
                     radius: int | None = None) -> np.ndarray:
    """Edge-preserving smoothing with a Gaussian spatial x Gaussian range kernel.

    Each output pixel is the normalized weighted mean of its
    ``(2 * radius + 1)**2`` neighbourhood. Out-of-bounds neighbours are
    taken from the nearest edge pixel (coordinate clamping).
    """
    if sigma_spatial <= 0 or sigma_range <= 0:
        raise ParameterError("sigma_spatial and sigma_range must be positive")
    if radius is None:
        radius = default_radius(sigma_spatial)
    if radius < 1:
        raise ParameterError(f"radius must be >= 1, got {radius}")
    arr = _as_image(img)
    rows, cols = arr.shape
    padded = np.pad(arr, radius, mode="edge")

    num = np.zeros_like(arr)
    den = np.zeros_like(arr)
    inv_2ss = 1.0 / (2.0 * sigma_spatial ** 2)
    inv_2sr = 1.0 / (2.0 * sigma_range ** 2)
    # Fixed offset order keeps the accumulation deterministic.
    for dr in range(-radius, radius + 1):
        for dc in range(-radius, radius + 1):
            shifted = padded[radius + dr:radius + dr + rows, radius + dc:radius + dc + cols]
            w = math.exp(-(dr * dr + dc * dc) * inv_2ss) * np.exp(-((shifted - arr) ** 2) * inv_2sr)
            num += w * shifted
            den += w
    out = num / den
    # Convex combination: rounding must not leave the input range.
    return np.clip(out, arr.min(), arr.max())


def quantize(img, n_levels: int = DEFAULT_LEVELS) -> np.ndarray:
    """Map intensities in ``[0, 1]`` to levels ``min(floor(v * n_levels), n_levels - 1)``."""
    if int(n_levels) != n_levels or n_levels < 2:
        raise ParameterError(f"n_levels must be an integer >= 2, got {n_levels}")
    arr = _as_image(img)
    levels = np.floor(arr * n_levels)
    return np.clip(levels, 0, n_levels - 1).astype(np.int64)


def preprocess(img, cfg: PreprocessConfig = PreprocessConfig()) -> np.ndarray:
    """Normalize then (optionally) denoise; returns a float image in ``[0, 1]``."""
    out = normalize_intensity(img, cfg.top_fraction)
    if cfg.denoise:
        out = bilateral_filter(out, cfg.sigma_spatial, cfg.sigma_range, cfg.radius)
    return out
