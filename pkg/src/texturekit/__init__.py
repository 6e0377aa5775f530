"""Texture classification with Haralick and NMF features and multi-level SVM fusion."""

__version__ = "0.1.0"

from .errors import (
    DataValidationError,
    NumericalError,
    ParameterError,
    TextureKitError,
)

__all__ = [
    "__version__",
    "TextureKitError",
    "ParameterError",
    "DataValidationError",
    "NumericalError",
]
