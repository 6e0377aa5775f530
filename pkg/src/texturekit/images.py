"""Grayscale image I/O: 8/16-bit PGM (P2 and P5) and PNG in, PGM out."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataValidationError
from .fsutil import atomic_write_bytes

IMAGE_SUFFIXES = (".pgm", ".png")


def read_image(path) -> np.ndarray:
    """Raw intensities as a 2-D float64 array (no rescaling)."""
    path = Path(path)
    with Image.open(path) as im:
        if im.mode in ("RGB", "RGBA", "P", "CMYK"):
            raise DataValidationError(f"{path}: color images are not supported (mode {im.mode})")
        if im.mode == "LA":
            im = im.getchannel("L")
        arr = np.asarray(im, dtype=np.float64)
    if arr.ndim != 2:
        raise DataValidationError(f"{path}: expected a single-channel image, got shape {arr.shape}")
    return arr


def write_pgm(path, img, bit_depth: int = 16) -> None:
    """Write an image with values in ``[0, 1]`` as binary PGM (P5)."""
    img = np.asarray(img, dtype=np.float64)
    if bit_depth == 16:
        data = np.round(np.clip(img, 0.0, 1.0) * 65535.0).astype(np.uint16)
    elif bit_depth == 8:
        data = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    else:
        raise ValueError(f"bit_depth must be 8 or 16, got {bit_depth}")
    buf = io.BytesIO()
    Image.fromarray(data).save(buf, format="PPM")
    atomic_write_bytes(path, buf.getvalue())


def list_images(directory) -> list[Path]:
    directory = Path(directory)
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
