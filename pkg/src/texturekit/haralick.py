"""The 14 Haralick texture statistics and their direction aggregate.

Gray levels follow the 1-based convention of the original definitions:
internal index ``i`` (0-based) stands for gray value ``i + 1``, so a sum index
``s = i + j`` stands for ``s + 2`` in ``{2, ..., 2 * N_g}``. Only the
location-dependent statistics (means, correlation, sum average, sum variance)
see this shift. Entropies use the natural logarithm with ``0 log 0 = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataValidationError
from .glcm import glcm_all_directions

FEATURE_NAMES = (
    "angular_second_moment",
    "contrast",
    "correlation",
    "sum_of_squares_variance",
    "inverse_difference_moment",
    "sum_average",
    "sum_variance",
    "sum_entropy",
    "entropy",
    "difference_variance",
    "difference_entropy",
    "info_measure_correlation_1",
    "info_measure_correlation_2",
    "maximal_correlation_coefficient",
)
N_FEATURES = len(FEATURE_NAMES)
COLUMN_NAMES = tuple(f"f{k}_mean" for k in range(1, 15)) + tuple(f"f{k}_range" for k in range(1, 15))

_NORM_TOL = 1e-9


@dataclass(frozen=True)
class GlcmMarginals:
    p_x: np.ndarray
    p_y: np.ndarray
    p_sum: np.ndarray   # index s <-> gray sum s + 2
    p_diff: np.ndarray  # index k <-> |i - j| = k
    mu_x: float
    mu_y: float
    sigma_x: float
    sigma_y: float
    hx: float
    hy: float
    hxy: float
    hxy1: float
    hxy2: float


@dataclass(frozen=True)
class HaralickFeatures:
    values: np.ndarray
    flags: tuple[str, ...] = ()

    def __getitem__(self, k: int) -> float:
        """1-based access: ``feats[1]`` is the angular second moment."""
        return float(self.values[k - 1])


@dataclass(frozen=True)
class HaralickVector28:
    mean: np.ndarray
    range: np.ndarray
    flags: tuple[str, ...] = field(default=())

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.mean, self.range])


def _entropy(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def _check_probs(P) -> np.ndarray:
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise DataValidationError(f"GLCM must be square, got shape {P.shape}")
    if np.any(P < 0) or abs(P.sum() - 1.0) > _NORM_TOL:
        raise DataValidationError("GLCM probabilities must be nonnegative and sum to 1")
    return P


def compute_marginals(P) -> GlcmMarginals:
    P = _check_probs(P)
    n = P.shape[0]
    g = np.arange(1, n + 1, dtype=np.float64)
    p_x = P.sum(axis=1)
    p_y = P.sum(axis=0)

    i, j = np.indices(P.shape)
    p_sum = np.bincount((i + j).ravel(), weights=P.ravel(), minlength=2 * n - 1)
    p_diff = np.bincount(np.abs(i - j).ravel(), weights=P.ravel(), minlength=n)

    mu_x = float(g @ p_x)
    mu_y = float(g @ p_y)
    sigma_x = float(np.sqrt(max(((g - mu_x) ** 2) @ p_x, 0.0)))
    sigma_y = float(np.sqrt(max(((g - mu_y) ** 2) @ p_y, 0.0)))

    outer = np.outer(p_x, p_y)
    nz = P > 0
    hxy1 = float(-np.sum(P[nz] * np.log(outer[nz])))
    return GlcmMarginals(
        p_x=p_x, p_y=p_y, p_sum=p_sum, p_diff=p_diff,
        mu_x=mu_x, mu_y=mu_y, sigma_x=sigma_x, sigma_y=sigma_y,
        hx=_entropy(p_x), hy=_entropy(p_y), hxy=_entropy(P),
        hxy1=hxy1, hxy2=_entropy(outer.ravel()),
    )


def maximal_correlation_coefficient(P, p_x=None, p_y=None) -> float:
    """Square root of the second-largest eigenvalue of ``Q``.

    ``Q = Dx^-1 P Dy^-1 P^T`` is similar to ``M M^T`` with
    ``M = Dx^-1/2 P Dy^-1/2``, so its eigenvalues are the squared singular
    values of ``M``; the answer is the second singular value. Rows and
    columns with zero marginal are dropped first.
    """
    P = np.asarray(P, dtype=np.float64)
    if p_x is None:
        p_x = P.sum(axis=1)
    if p_y is None:
        p_y = P.sum(axis=0)
    rows = p_x > 0
    cols = p_y > 0
    M = P[np.ix_(rows, cols)] / np.sqrt(np.outer(p_x[rows], p_y[cols]))
    s = np.linalg.svd(M, compute_uv=False)
    if s.size < 2:
        return 0.0
    return float(min(max(s[1], 0.0), 1.0))


def compute_features(P) -> HaralickFeatures:
    P = _check_probs(P)
    m = compute_marginals(P)
    n = P.shape[0]
    g = np.arange(1, n + 1, dtype=np.float64)
    i, j = np.indices(P.shape)
    flags: list[str] = []

    f1 = float(np.sum(P * P))
    k = np.arange(n, dtype=np.float64)
    f2 = float((k ** 2) @ m.p_diff)

    denom = m.sigma_x * m.sigma_y
    if denom > 0:
        f3 = float((np.sum(np.outer(g, g) * P) - m.mu_x * m.mu_y) / denom)
        f3 = min(max(f3, -1.0), 1.0)
    else:
        f3 = 0.0
        flags.append("degenerate correlation")

    f4 = float(np.sum(((g - m.mu_x) ** 2)[:, None] * P))
    f5 = float(np.sum(P / (1.0 + (i - j) ** 2)))

    s = np.arange(2, 2 * n + 1, dtype=np.float64)
    f6 = float(s @ m.p_sum)
    f8 = _entropy(m.p_sum)
    f7 = float(((s - f8) ** 2) @ m.p_sum)
    f9 = m.hxy

    mu_d = float(k @ m.p_diff)
    f10 = float(((k - mu_d) ** 2) @ m.p_diff)
    f11 = _entropy(m.p_diff)

    hmax = max(m.hx, m.hy)
    if hmax > 0:
        f12 = (m.hxy - m.hxy1) / hmax
    else:
        f12 = 0.0
        flags.append("degenerate information measure")
    f13 = float(np.sqrt(max(0.0, 1.0 - np.exp(-2.0 * (m.hxy2 - m.hxy)))))
    f14 = maximal_correlation_coefficient(P, m.p_x, m.p_y)

    values = np.array([f1, f2, f3, f4, f5, f6, f7, f8, f9, f10, f11, f12, f13, f14])
    return HaralickFeatures(values=values, flags=tuple(flags))


def aggregate_directions(features) -> HaralickVector28:
    """Per-feature mean and range (max - min) over the four directions."""
    features = list(features)
    if len(features) != 4:
        raise DataValidationError(f"expected 4 directional feature sets, got {len(features)}")
    # Sorting first makes the result independent of input order, bit for bit.
    stack = np.sort(np.vstack([f.values for f in features]), axis=0)
    flags = tuple(sorted({fl for f in features for fl in f.flags}))
    return HaralickVector28(mean=stack.mean(axis=0), range=stack.max(axis=0) - stack.min(axis=0),
                            flags=flags)


def haralick_vector(quantized, levels: int, distance: int = 1) -> np.ndarray:
    """28-D descriptor of a quantized image: 14 means followed by 14 ranges."""
    glcms = glcm_all_directions(quantized, levels, distance)
    return aggregate_directions(compute_features(g.probs) for g in glcms).as_array()
