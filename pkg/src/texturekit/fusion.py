"""Multi-level classification: two SVMs, the more confident one decides.

One SVM sees the 28 Haralick features, the other the NMF weight vector of
the same image. Each yields a signed hyperplane distance; the prediction of
the model with the larger absolute distance is adopted as is (no blending).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .features import FeatureConfig, haralick_from_image, nmf_column
from .nmf import NmfModel, nmf_encode
from .preprocess import preprocess
from .svm import SvmModel

HARALICK = "haralick"
NMF = "nmf"
# Equal |score| (to within TIE_EPS) goes to the Haralick model.
TIE_RULE = "haralick-wins-ties"
TIE_EPS = 1e-12


@dataclass(frozen=True)
class FusionDecision:
    label: int
    winner: str
    score_haralick: float
    score_nmf: float

    @property
    def score(self) -> float:
        return self.score_haralick if self.winner == HARALICK else self.score_nmf


@dataclass
class FusionModel:
    haralick_model: SvmModel
    nmf_model: SvmModel
    encoder: NmfModel
    features: FeatureConfig = field(default_factory=FeatureConfig)
    tie_rule: str = TIE_RULE


def _sign(x: float) -> int:
    return 1 if x >= 0.0 else -1


def fuse_scores(score_haralick: float, score_nmf: float) -> FusionDecision:
    sh, sn = float(score_haralick), float(score_nmf)
    if not math.isfinite(sh):
        raise NumericalError(f"non-finite score from the haralick pipeline: {sh}")
    if not math.isfinite(sn):
        raise NumericalError(f"non-finite score from the nmf pipeline: {sn}")
    if abs(sn) - abs(sh) > TIE_EPS:
        return FusionDecision(_sign(sn), NMF, sh, sn)
    return FusionDecision(_sign(sh), HARALICK, sh, sn)


def classify_features(fm: FusionModel, hvec, nvec) -> FusionDecision:
    """Fuse from precomputed (unstandardized) feature vectors."""
    for name, vec in ((HARALICK, hvec), (NMF, nvec)):
        if not np.all(np.isfinite(np.asarray(vec, dtype=np.float64))):
            raise NumericalError(f"non-finite features in the {name} pipeline")
    sh = float(fm.haralick_model.scores(hvec)[0])
    sn = float(fm.nmf_model.scores(nvec)[0])
    return fuse_scores(sh, sn)


def image_features(fm: FusionModel, image) -> tuple[np.ndarray, np.ndarray]:
    pre = preprocess(image, fm.features.preprocess)
    hvec = haralick_from_image(pre, fm.features, prepared=True)
    nvec = nmf_encode(fm.encoder, nmf_column(pre, fm.features, prepared=True))
    return hvec, nvec


def classify(fm: FusionModel, image) -> FusionDecision:
    hvec, nvec = image_features(fm, image)
    return classify_features(fm, hvec, nvec)
