"""Non-negative matrix factorization ``A ~ V H`` with multiplicative updates.

Columns of ``A`` are samples. ``V`` (m x r) is the basis, ``H`` (r x n) holds
one weight vector per sample. New samples are encoded against the fixed
basis by nonnegative least squares.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import nnls

from .errors import DataValidationError, ParameterError

EPS = 1e-12


@dataclass(frozen=True)
class NmfConfig:
    rank: int = 8
    max_iters: int = 500
    rel_tol: float = 1e-6
    seed: int = 0
    # Budget for multiplicative encoding (nmf_encode(method="multiplicative")).
    encode_max_iters: int = 5000
    encode_rel_tol: float = 1e-10

    def __post_init__(self):
        if self.rank < 1:
            raise ParameterError(f"rank must be >= 1, got {self.rank}")
        if self.max_iters < 1 or self.encode_max_iters < 1:
            raise ParameterError("max_iters must be >= 1")
        if self.rel_tol <= 0 or self.encode_rel_tol <= 0:
            raise ParameterError("rel_tol must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "NmfConfig":
        return cls(**d)


@dataclass
class NmfModel:
    basis: np.ndarray
    config: NmfConfig = field(default_factory=NmfConfig)
    train_residual: float = float("nan")
    # How training columns were built from images (e.g. sample shape); opaque here.
    representation: dict = field(default_factory=dict)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @property
    def rows(self) -> int:
        return self.basis.shape[0]

    @property
    def column_norms(self) -> np.ndarray:
        return np.linalg.norm(self.basis, axis=0)


def _check_nonneg(A, name: str) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if not np.all(np.isfinite(A)):
        raise DataValidationError(f"{name} contains non-finite entries")
    if np.any(A < 0):
        raise DataValidationError(f"{name} has negative entries; NMF needs nonnegative data")
    return A


def _objective(A, V, H) -> float:
    R = A - V @ H
    return float(np.sum(R * R))


def _converged(prev: float, cur: float, rel_tol: float) -> bool:
    if prev <= 0.0:
        return True
    return (prev - cur) / prev < rel_tol


def nmf_factorize(A, cfg: NmfConfig = NmfConfig()):
    """Fit ``A ~ V H`` minimizing the squared Frobenius error.

    Returns ``(model, H, trace)`` where ``trace[k]`` is the objective after
    iteration ``k``; it is non-increasing.
    """
    A = _check_nonneg(A, "A")
    if A.ndim != 2:
        raise DataValidationError("A must be a 2-D matrix")
    m, n = A.shape
    r = cfg.rank
    if r >= min(m, n):
        raise ParameterError(f"rank {r} must be smaller than both dimensions of A {A.shape}")

    rng = np.random.default_rng(cfg.seed)
    scale = np.sqrt(A.mean() / r) if A.mean() > 0 else 1.0
    # uniform on (0, 1]
    V = (1.0 - rng.random((m, r))) * scale
    H = (1.0 - rng.random((r, n))) * scale

    # ||A - VH||^2 = ||A||^2 - 2<V^T A, H> + <V^T V, H H^T>; the two Gram
    # products are reused by the next H update.
    AA = float(np.vdot(A, A))
    VtA = V.T @ A
    VtV = V.T @ V
    trace: list[float] = []
    prev = _objective(A, V, H)
    for _ in range(cfg.max_iters):
        H *= VtA / (VtV @ H + EPS)
        HHt = H @ H.T
        V *= (A @ H.T) / (V @ HHt + EPS)
        VtA = V.T @ A
        VtV = V.T @ V
        cur = max(AA - 2.0 * float(np.vdot(VtA, H)) + float(np.vdot(VtV, HHt)), 0.0)
        trace.append(cur)
        if _converged(prev, cur, cfg.rel_tol):
            break
        prev = cur

    residual = float(np.sqrt(_objective(A, V, H)))
    model = NmfModel(basis=V, config=cfg, train_residual=residual)
    return model, H, np.asarray(trace)


def nmf_encode(model: NmfModel, a, method: str = "nnls", return_trace: bool = False):
    """Nonnegative weights ``h`` minimizing ``||a - V h||^2`` with ``V`` fixed.

    ``method="nnls"`` solves the subproblem exactly (Lawson-Hanson).
    ``method="multiplicative"`` runs the ``H`` update of the factorization
    from a start proportional to ``a``'s mass; it converges slowly when the
    optimum has zero weights. Accepts a vector or a matrix of column samples;
    columns are encoded independently.
    """
    a = _check_nonneg(a, "sample")
    V = model.basis
    single = a.ndim == 1
    cols = a[:, None] if single else a
    if cols.shape[0] != V.shape[0]:
        raise DataValidationError(f"sample has {cols.shape[0]} rows, basis expects {V.shape[0]}")
    if method == "nnls":
        H = np.column_stack([_nnls(V, cols[:, c]) for c in range(cols.shape[1])])
        traces = [np.array([_objective(cols[:, [c]], V, H[:, [c]])]) for c in range(cols.shape[1])]
    elif method == "multiplicative":
        pairs = [_encode_multiplicative(V, cols[:, c], model.config) for c in range(cols.shape[1])]
        H = np.column_stack([h for h, _ in pairs])
        traces = [t for _, t in pairs]
    else:
        raise ParameterError(f"unknown encoding method {method!r}")
    out = H[:, 0] if single else H
    if return_trace:
        return out, (traces[0] if single else traces)
    return out


def _nnls(V: np.ndarray, a: np.ndarray) -> np.ndarray:
    if not np.any(a):
        return np.zeros(V.shape[1])
    h, _ = nnls(V, a, maxiter=50 * V.shape[1])
    return h


def _encode_multiplicative(V: np.ndarray, a: np.ndarray, cfg: NmfConfig):
    r = V.shape[1]
    rng = np.random.default_rng(cfg.seed)
    h = (1.0 - rng.random(r)) * (a.sum() / max(V.sum(), EPS))
    VtV = V.T @ V
    Vta = V.T @ a
    aa = float(a @ a)

    def obj(h):
        # ||a - Vh||^2 via the Gram form: O(r^2) per iteration.
        return max(aa - 2.0 * float(h @ Vta) + float(h @ VtV @ h), 0.0)

    trace: list[float] = []
    prev = obj(h)
    for _ in range(cfg.encode_max_iters):
        h = h * Vta / (VtV @ h + EPS)
        cur = obj(h)
        trace.append(cur)
        if _converged(prev, cur, cfg.encode_rel_tol):
            break
        prev = cur
    return h, np.asarray(trace)
