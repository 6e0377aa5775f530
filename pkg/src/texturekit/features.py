"""Image -> feature-vector pipelines shared by training, evaluation and the CLI."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from PIL import Image

from .errors import DataValidationError
from .haralick import haralick_vector
from .preprocess import PreprocessConfig, preprocess, quantize

# Labels: stroke (positive class) -> +1, non-stroke -> -1.
LABELS = {"stroke": 1, "nonstroke": -1}
LABEL_NAMES = {1: "stroke", -1: "nonstroke"}


def parse_label(value) -> int:
    text = str(value).strip().lower()
    if text in ("1", "+1", "1.0"):
        return 1
    if text in ("-1", "-1.0"):
        return -1
    text = text.replace("-", "").replace("_", "")
    if text in LABELS:
        return LABELS[text]
    raise DataValidationError(f"unrecognised label {value!r}; use stroke/nonstroke or +1/-1")


@dataclass(frozen=True)
class FeatureConfig:
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    distance: int = 1
    # Images are resampled to this shape before being flattened into NMF columns.
    nmf_shape: tuple[int, int] = (64, 64)

    @property
    def levels(self) -> int:
        return self.preprocess.levels

    def to_dict(self) -> dict:
        d = asdict(self)
        d["nmf_shape"] = list(self.nmf_shape)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureConfig":
        return cls(preprocess=PreprocessConfig.from_dict(d["preprocess"]),
                   distance=int(d.get("distance", 1)),
                   nmf_shape=tuple(d.get("nmf_shape", (64, 64))))


def haralick_from_image(img, cfg: FeatureConfig = FeatureConfig(), prepared: bool = False) -> np.ndarray:
    """28 Haralick features of a raw image (or of an already preprocessed one)."""
    pre = np.asarray(img, dtype=np.float64) if prepared else preprocess(img, cfg.preprocess)
    return haralick_vector(quantize(pre, cfg.levels), cfg.levels, cfg.distance)


def resample(img, shape: tuple[int, int]) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    rows, cols = shape
    if img.shape == (rows, cols):
        return img.copy()
    if img.shape[0] % rows == 0 and img.shape[1] % cols == 0:
        fr, fc = img.shape[0] // rows, img.shape[1] // cols
        return img.reshape(rows, fr, cols, fc).mean(axis=(1, 3))
    out = Image.fromarray(img.astype(np.float32), mode="F").resize((cols, rows), Image.BOX)
    return np.asarray(out, dtype=np.float64)


def nmf_column(img, cfg: FeatureConfig = FeatureConfig(), prepared: bool = False) -> np.ndarray:
    """Flattened, resampled preprocessed image; one column of the NMF data matrix."""
    pre = np.asarray(img, dtype=np.float64) if prepared else preprocess(img, cfg.preprocess)
    return np.clip(resample(pre, cfg.nmf_shape), 0.0, None).ravel()
