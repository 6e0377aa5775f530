"""Soft-margin kernel SVM trained with SMO, plus hyperplane-distance scores.

Labels are ``+1`` / ``-1``. The dual

    min_a  1/2 a^T Q a - sum(a)   s.t.  0 <= a_i <= C,  y^T a = 0,
    Q_ij = y_i y_j K(x_i, x_j)

is solved by sequential minimal optimization with maximal-violating-pair
working-set selection. The score of a sample is its signed geometric
distance ``f(x) / ||w||`` from the separating hyperplane in feature space,
which is what makes scores of two different models comparable.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataValidationError, NumericalError, ParameterError

TAU = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    """``linear``: u.v; ``rbf``: exp(-|u-v|^2 / (2 sigma^2)); ``sigmoid``: tanh(a u.v + b)."""

    kind: str = "linear"
    sigma: float = 40.0
    a: float = 1.0
    b: float = -9.0

    def __post_init__(self):
        if self.kind not in ("linear", "rbf", "sigmoid"):
            raise ParameterError(f"unknown kernel {self.kind!r}")
        if self.kind == "rbf" and not self.sigma > 0:
            raise ParameterError(f"rbf sigma must be positive, got {self.sigma}")

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls("linear")

    @classmethod
    def rbf(cls, sigma: float = 40.0) -> "KernelSpec":
        return cls("rbf", sigma=sigma)

    @classmethod
    def sigmoid(cls, a: float = 1.0, b: float = -9.0) -> "KernelSpec":
        return cls("sigmoid", a=a, b=b)

    @classmethod
    def parse(cls, name: str, sigma: float = 40.0, a: float = 1.0, b: float = -9.0) -> "KernelSpec":
        name = name.lower()
        if name == "linear":
            return cls.linear()
        if name == "rbf":
            return cls.rbf(sigma)
        if name in ("mlp", "sigmoid"):
            return cls.sigmoid(a, b)
        raise ParameterError(f"unknown kernel {name!r}; use linear, rbf or mlp")

    def matrix(self, X, Y) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
        if X.shape[1] != Y.shape[1]:
            raise DataValidationError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
        if self.kind == "linear":
            return X @ Y.T
        if self.kind == "rbf":
            sq = (X * X).sum(1)[:, None] + (Y * Y).sum(1)[None, :] - 2.0 * X @ Y.T
            return np.exp(-np.maximum(sq, 0.0) / (2.0 * self.sigma ** 2))
        return np.tanh(self.a * (X @ Y.T) + self.b)

    def to_dict(self) -> dict:
        if self.kind == "linear":
            return {"kind": "linear"}
        if self.kind == "rbf":
            return {"kind": "rbf", "sigma": self.sigma, "form": "exp(-|u-v|^2/(2 sigma^2))"}
        return {"kind": "sigmoid", "a": self.a, "b": self.b, "form": "tanh(a u.v + b)"}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        kind = d["kind"]
        if kind == "linear":
            return cls.linear()
        if kind == "rbf":
            return cls.rbf(float(d["sigma"]))
        if kind == "sigmoid":
            return cls.sigmoid(float(d["a"]), float(d["b"]))
        raise DataValidationError(f"kernel.kind: unknown kernel {kind!r}")


def kernel_eval(spec: KernelSpec, u, v) -> float:
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise DataValidationError(f"dimension mismatch: {u.size} vs {v.size}")
    return float(spec.matrix(u[None, :], v[None, :])[0, 0])


@dataclass
class SvmModel:
    support_vectors: np.ndarray
    alphas: np.ndarray
    sv_labels: np.ndarray
    bias: float
    kernel: KernelSpec
    C: float
    w_norm: float
    # z-score applied to raw inputs before the kernel; identity by default.
    feature_mean: np.ndarray | None = None
    feature_scale: np.ndarray | None = None
    warnings: tuple[str, ...] = field(default=())
    # Positions of the support vectors in the training set.
    sv_indices: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.support_vectors.shape[1]

    def transform(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dim:
            raise DataValidationError(f"dimension mismatch: model expects {self.dim}, got {X.shape[1]}")
        if self.feature_mean is not None:
            X = (X - self.feature_mean) / self.feature_scale
        return X

    def decision_function(self, X) -> np.ndarray:
        Z = self.transform(X)
        K = self.kernel.matrix(Z, self.support_vectors)
        return K @ (self.alphas * self.sv_labels) + self.bias

    def decision_value(self, x) -> float:
        return float(self.decision_function(np.asarray(x, dtype=np.float64).reshape(1, -1))[0])

    def predict(self, X) -> np.ndarray:
        # f(x) == 0 is assigned to the positive class.
        return np.where(self.decision_function(X) >= 0.0, 1, -1)

    def scores(self, X) -> np.ndarray:
        if not self.w_norm > 0:
            raise NumericalError("degenerate model (zero hyperplane norm)")
        return self.decision_function(X) / self.w_norm


def score(model: SvmModel, x) -> float:
    """Signed distance of ``x`` from the model's hyperplane."""
    return float(model.scores(np.asarray(x, dtype=np.float64).reshape(1, -1))[0])


def decision_value(model: SvmModel, x) -> float:
    return model.decision_value(x)


def _check_training_set(X, y):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y).ravel()
    if X.shape[0] != y.size:
        raise DataValidationError(f"{X.shape[0]} samples but {y.size} labels")
    if not np.all(np.isin(y, (-1, 1))):
        raise DataValidationError("labels must be +1 or -1")
    if not (np.any(y == 1) and np.any(y == -1)):
        raise DataValidationError("degenerate training set (single class)")
    if not np.all(np.isfinite(X)):
        raise DataValidationError("training features contain non-finite values")
    return X, y.astype(np.float64)


def smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float = 1e-3,
              max_iter: int = 100_000):
    """Solve the dual for a precomputed kernel matrix.

    Returns ``(alpha, rho, n_iter)``; the decision function is
    ``sum_i alpha_i y_i K(x_i, x) - rho``.
    """
    n = y.size
    Q = (y[:, None] * y[None, :]) * K
    QD = np.diag(Q).copy()
    alpha = np.zeros(n)
    G = -np.ones(n)

    it = 0
    for it in range(1, max_iter + 1):
        yG = -y * G
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        i = int(np.argmax(np.where(up, yG, -np.inf)))
        j = int(np.argmin(np.where(low, yG, np.inf)))
        if yG[i] - yG[j] < tol:
            break

        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = QD[i] + QD[j] + 2.0 * Q[i, j]
            if quad <= 0:
                quad = TAU
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            elif alpha[j] > C:
                alpha[j] = C
                alpha[i] = C + diff
        else:
            quad = QD[i] + QD[j] - 2.0 * Q[i, j]
            if quad <= 0:
                quad = TAU
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            elif alpha[j] < 0:
                alpha[j] = 0.0
                alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = total

        G += Q[:, i] * (alpha[i] - ai) + Q[:, j] * (alpha[j] - aj)
    else:
        warnings.warn(f"SMO stopped at max_iter={max_iter} before reaching tol={tol}")

    rho = _compute_rho(alpha, y, G, C)
    return alpha, rho, it


def _compute_rho(alpha, y, G, C) -> float:
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        return float(yG[free].mean())
    ub, lb = np.inf, -np.inf
    for a, yi, v in zip(alpha, y, yG):
        at_upper, at_lower = a >= C, a <= 0
        if (yi > 0 and at_upper) or (yi < 0 and at_lower):
            lb = max(lb, v)
        elif (yi > 0 and at_lower) or (yi < 0 and at_upper):
            ub = min(ub, v)
    return float((ub + lb) / 2.0)


def train_svm(X, y, kernel: KernelSpec = KernelSpec(), C: float = 1.0,
              tol: float = 1e-3, max_iter: int = 100_000) -> SvmModel:
    """Train on raw features (no standardization)."""
    if not C > 0:
        raise ParameterError(f"C must be positive, got {C}")
    X, y = _check_training_set(X, y)
    K = kernel.matrix(X, X)
    notes: list[str] = []
    if kernel.kind == "sigmoid":
        lam_min = float(np.linalg.eigvalsh((K + K.T) / 2.0)[0])
        if lam_min < -1e-10 * max(1.0, np.abs(K).max()):
            notes.append("kernel matrix not positive semidefinite")

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        alpha, rho, _ = smo_solve(K, y, C, tol=tol, max_iter=max_iter)
    notes.extend(str(w.message) for w in caught)

    sv = alpha > 0
    coef = alpha[sv] * y[sv]
    quad = float(coef @ K[np.ix_(sv, sv)] @ coef)
    if quad < 0:
        notes.append("negative squared hyperplane norm; using its magnitude")
    return SvmModel(
        support_vectors=X[sv].copy(),
        alphas=alpha[sv].copy(),
        sv_labels=y[sv].copy(),
        bias=-rho,
        kernel=kernel,
        C=float(C),
        w_norm=float(np.sqrt(abs(quad))),
        warnings=tuple(notes),
        sv_indices=np.flatnonzero(sv),
    )


def standardization(X) -> tuple[np.ndarray, np.ndarray]:
    """Column means and standard deviations; constant columns get scale 1."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale <= 1e-12 * np.maximum(1.0, np.abs(mean))] = 1.0
    return mean, scale


def fit_svm(X, y, kernel: KernelSpec = KernelSpec(), C: float = 1.0, **kw) -> SvmModel:
    """Z-score the features with their own statistics, then train.

    The statistics are stored on the model and reapplied to every input.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    mean, scale = standardization(X)
    model = train_svm((X - mean) / scale, y, kernel, C, **kw)
    model.feature_mean = mean
    model.feature_scale = scale
    return model


def dual_objective(alpha, K, y) -> float:
    """``sum(a) - 1/2 a^T Q a`` (the maximization form of the dual)."""
    a = np.asarray(alpha, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    Q = (y[:, None] * y[None, :]) * K
    return float(a.sum() - 0.5 * a @ Q @ a)
