"""Leave-one-out cross-validation, confusion counts and SN/SP/AC metrics.

Every fold refits the whole pipeline on the N-1 training samples: the NMF
basis, the feature standardization and the SVM(s). Haralick descriptors
involve no fitting, so they are computed once per image up front.
"""

from __future__ import annotations

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .dataset import LabeledDataset
from .errors import DataValidationError, ParameterError
from .features import FeatureConfig, haralick_from_image, nmf_column
from .fusion import FusionModel, classify_features
from .nmf import NmfConfig, NmfModel, nmf_encode, nmf_factorize
from .preprocess import preprocess
from .svm import KernelSpec, fit_svm

log = logging.getLogger(__name__)


@dataclass
class ConfusionMatrix:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def add(self, truth: int, predicted: int) -> None:
        if truth == 1:
            if predicted == 1:
                self.tp += 1
            else:
                self.fn += 1
        elif predicted == 1:
            self.fp += 1
        else:
            self.tn += 1

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Metrics:
    """Percentages; ``None`` where the denominator is zero (see ``flags``)."""

    sensitivity: float | None
    specificity: float | None
    accuracy: float | None
    flags: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"sn": self.sensitivity, "sp": self.specificity, "ac": self.accuracy,
                "flags": list(self.flags)}


def metrics(cm: ConfusionMatrix) -> Metrics:
    flags = []

    def pct(num, den, name):
        if den == 0:
            flags.append(f"{name} undefined (zero denominator)")
            return None
        return 100.0 * num / den

    sn = pct(cm.tp, cm.tp + cm.fn, "sensitivity")
    sp = pct(cm.tn, cm.tn + cm.fp, "specificity")
    ac = pct(cm.tp + cm.tn, cm.total, "accuracy")
    return Metrics(sn, sp, ac, tuple(flags))


class ClassifierKind(str, enum.Enum):
    HARALICK = "haralick"
    NMF = "nmf"
    CONCATENATED = "concat"
    MULTILEVEL = "multilevel"

    @classmethod
    def parse(cls, name: str) -> "ClassifierKind":
        aliases = {"concatenated": "concat", "multi-level": "multilevel", "multi_level": "multilevel"}
        try:
            return cls(aliases.get(name.lower(), name.lower()))
        except ValueError:
            raise ParameterError(f"unknown classifier {name!r}") from None


@dataclass(frozen=True)
class EvalConfig:
    classifier: ClassifierKind = ClassifierKind.MULTILEVEL
    # Kernel for the Haralick model (and the single model of haralick/nmf/concat runs).
    kernel: KernelSpec = KernelSpec.linear()
    # Kernel for the NMF model; defaults to ``kernel``.
    nmf_kernel: KernelSpec | None = None
    C: float = 1.0
    nmf: NmfConfig = NmfConfig()
    features: FeatureConfig = FeatureConfig()
    seed: int = 0
    n_jobs: int = 1

    @property
    def resolved_nmf_kernel(self) -> KernelSpec:
        if self.nmf_kernel is not None:
            return self.nmf_kernel
        return self.kernel

    def to_dict(self) -> dict:
        return {
            "classifier": self.classifier.value,
            "kernel": self.kernel.to_dict(),
            "nmf_kernel": self.resolved_nmf_kernel.to_dict(),
            "C": self.C,
            "nmf": self.nmf.to_dict(),
            "features": self.features.to_dict(),
            "seed": self.seed,
        }


@dataclass(frozen=True)
class FoldRecord:
    fold: int
    sample_id: str
    truth: int
    predicted: int | None
    score: float | None = None
    score_haralick: float | None = None
    score_nmf: float | None = None
    winner: str | None = None
    degenerate: bool = False

    @property
    def correct(self) -> bool | None:
        return None if self.predicted is None else self.predicted == self.truth


@dataclass
class LoocvResult:
    confusion: ConfusionMatrix
    records: list[FoldRecord]
    config: dict = field(default_factory=dict)

    @property
    def metrics(self) -> Metrics:
        return metrics(self.confusion)

    @property
    def degenerate_folds(self) -> list[int]:
        return [r.fold for r in self.records if r.degenerate]


def concat_features(hvec, nvec) -> np.ndarray:
    """Haralick block first, then the NMF block.

    Standardization is per dimension, so z-scoring the concatenation is the
    same as z-scoring each block on its own before joining them.
    """
    return np.concatenate([np.ravel(hvec), np.ravel(nvec)])


@dataclass
class PreparedData:
    """Fold-independent per-image data: labels, Haralick vectors, NMF columns."""

    ids: list[str]
    labels: np.ndarray
    haralick: np.ndarray       # N x 28
    nmf_columns: np.ndarray    # m x N


def prepare(dataset: LabeledDataset, features: FeatureConfig = FeatureConfig()) -> PreparedData:
    hvecs, cols = [], []
    for img in dataset.images:
        pre = preprocess(img, features.preprocess)
        hvecs.append(haralick_from_image(pre, features, prepared=True))
        cols.append(nmf_column(pre, features, prepared=True))
    return PreparedData(ids=list(dataset.ids), labels=np.asarray(dataset.labels, dtype=int),
                        haralick=np.vstack(hvecs), nmf_columns=np.column_stack(cols))


def fit_encoder(columns: np.ndarray, cfg: NmfConfig, features: FeatureConfig | None = None) -> NmfModel:
    model, _, _ = nmf_factorize(columns, cfg)
    if features is not None:
        model.representation = {"input": "pixels", "sample_shape": list(features.nmf_shape),
                                "features": features.to_dict()}
    return model


def fit_fusion(data: PreparedData, train: np.ndarray, cfg: EvalConfig, nmf_seed: int) -> FusionModel:
    """Fit NMF basis and both SVMs on the ``train`` rows only."""
    y = data.labels[train]
    encoder = fit_encoder(data.nmf_columns[:, train], replace(cfg.nmf, seed=nmf_seed), cfg.features)
    weights = nmf_encode(encoder, data.nmf_columns[:, train]).T
    h_model = fit_svm(data.haralick[train], y, cfg.kernel, cfg.C)
    n_model = fit_svm(weights, y, cfg.resolved_nmf_kernel, cfg.C)
    return FusionModel(haralick_model=h_model, nmf_model=n_model, encoder=encoder, features=cfg.features)


def _run_fold(data: PreparedData, k: int, cfg: EvalConfig) -> FoldRecord:
    n = data.labels.size
    train = np.array([i for i in range(n) if i != k])
    truth = int(data.labels[k])
    sid = data.ids[k]
    y = data.labels[train]
    if not (np.any(y == 1) and np.any(y == -1)):
        log.warning("fold %d: training split has a single class; excluded", k)
        return FoldRecord(k, sid, truth, None, degenerate=True)

    kind = cfg.classifier
    nmf_seed = cfg.nmf.seed + cfg.seed + k
    if kind == ClassifierKind.HARALICK:
        model = fit_svm(data.haralick[train], y, cfg.kernel, cfg.C)
        s = float(model.scores(data.haralick[k])[0])
        return FoldRecord(k, sid, truth, 1 if s >= 0 else -1, score=s, score_haralick=s)

    encoder = fit_encoder(data.nmf_columns[:, train], replace(cfg.nmf, seed=nmf_seed))
    w_train = nmf_encode(encoder, data.nmf_columns[:, train]).T
    w_test = nmf_encode(encoder, data.nmf_columns[:, k])

    if kind == ClassifierKind.NMF:
        model = fit_svm(w_train, y, cfg.resolved_nmf_kernel, cfg.C)
        s = float(model.scores(w_test)[0])
        return FoldRecord(k, sid, truth, 1 if s >= 0 else -1, score=s, score_nmf=s)

    if kind == ClassifierKind.CONCATENATED:
        X = np.hstack([data.haralick[train], w_train])
        model = fit_svm(X, y, cfg.kernel, cfg.C)
        s = float(model.scores(concat_features(data.haralick[k], w_test))[0])
        return FoldRecord(k, sid, truth, 1 if s >= 0 else -1, score=s)

    fm = FusionModel(
        haralick_model=fit_svm(data.haralick[train], y, cfg.kernel, cfg.C),
        nmf_model=fit_svm(w_train, y, cfg.resolved_nmf_kernel, cfg.C),
        encoder=encoder,
        features=cfg.features,
    )
    d = classify_features(fm, data.haralick[k], w_test)
    return FoldRecord(k, sid, truth, d.label, score=d.score, score_haralick=d.score_haralick,
                      score_nmf=d.score_nmf, winner=d.winner)


def _check_labels(labels: np.ndarray) -> None:
    if labels.size < 3:
        raise ParameterError(f"LOOCV needs at least 3 samples, got {labels.size}")
    if not (np.any(labels == 1) and np.any(labels == -1)):
        raise DataValidationError("dataset contains a single class")


def _collect(records: list[FoldRecord]) -> ConfusionMatrix:
    cm = ConfusionMatrix()
    for r in sorted(records, key=lambda r: r.fold):
        if not r.degenerate:
            cm.add(r.truth, r.predicted)
    return cm


def _map_folds(fn, n: int, n_jobs: int) -> list:
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            out = list(pool.map(fn, range(n)))
    else:
        out = [fn(k) for k in range(n)]
    return sorted(out, key=lambda r: r.fold)


def loocv(dataset: LabeledDataset | PreparedData, cfg: EvalConfig = EvalConfig()) -> LoocvResult:
    data = dataset if isinstance(dataset, PreparedData) else prepare(dataset, cfg.features)
    _check_labels(data.labels)
    records = _map_folds(lambda k: _run_fold(data, k, cfg), data.labels.size, cfg.n_jobs)
    return LoocvResult(confusion=_collect(records), records=records, config=cfg.to_dict())


def loocv_vectors(X, y, kernel: KernelSpec = KernelSpec.linear(), C: float = 1.0,
                  ids: list[str] | None = None, n_jobs: int = 1,
                  standardize: bool = True) -> LoocvResult:
    """LOOCV of a single SVM on precomputed feature vectors."""
    from .svm import train_svm

    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=int)
    _check_labels(y)
    ids = ids or [str(i) for i in range(y.size)]
    fit = fit_svm if standardize else train_svm

    def fold(k: int) -> FoldRecord:
        train = np.array([i for i in range(y.size) if i != k])
        if not (np.any(y[train] == 1) and np.any(y[train] == -1)):
            return FoldRecord(k, ids[k], int(y[k]), None, degenerate=True)
        model = fit(X[train], y[train], kernel, C)
        s = float(model.scores(X[k])[0])
        return FoldRecord(k, ids[k], int(y[k]), 1 if s >= 0 else -1, score=s)

    records = _map_folds(fold, y.size, n_jobs)
    return LoocvResult(confusion=_collect(records), records=records,
                       config={"kernel": kernel.to_dict(), "C": C, "standardize": standardize})


def compare(dataset: LabeledDataset | PreparedData, cfg: EvalConfig = EvalConfig()) -> dict[str, LoocvResult]:
    """LOOCV of all four classifier kinds on the same data."""
    data = dataset if isinstance(dataset, PreparedData) else prepare(dataset, cfg.features)
    return {kind.value: loocv(data, replace(cfg, classifier=kind)) for kind in ClassifierKind}


TABLE_COLUMNS = (("haralick", "Haralick"), ("nmf", "NMF"),
                 ("concat", "Concatenated"), ("multilevel", "Multi-Level"))

# Pipeline choices recorded in every report.
PIPELINE_NOTES = {
    "standardization": "z-score per dimension using training-fold statistics",
    "nmf_refit_per_fold": True,
    "nmf_seed": "nmf.seed + seed + fold_index",
    "nmf_encoding": "nonnegative least squares against the fold's basis (train and held-out samples)",
    "score": "signed distance f(x)/||w||",
    "fusion_tie_rule": "haralick-wins-ties",
    "positive_class": "stroke (+1)",
}


def report_dict(result: LoocvResult, comparison: dict[str, LoocvResult] | None = None) -> dict:
    m = result.metrics
    out = {
        "config": result.config,
        "confusion": result.confusion.to_dict(),
        "metrics": {"sn": m.sensitivity, "sp": m.specificity, "ac": m.accuracy},
        "metric_flags": list(m.flags),
        "n_samples": len(result.records),
        "degenerate_folds": result.degenerate_folds,
        "pipeline": PIPELINE_NOTES,
    }
    if comparison:
        # A list, so the column order survives key-sorted JSON.
        out["comparison"] = [
            {"key": key, "label": label, "sn": comparison[key].metrics.sensitivity,
             "sp": comparison[key].metrics.specificity, "ac": comparison[key].metrics.accuracy,
             "confusion": comparison[key].confusion.to_dict()}
            for key, label in TABLE_COLUMNS if key in comparison
        ]
    return out
