"""Versioned JSON persistence for models, reports and feature tables.

Every JSON artifact is wrapped in an envelope::

    {"schema_version": 1, "artifact_kind": "svm", "payload": {...},
     "content_hash": "sha256:<hex of canonical payload JSON>",
     "manifest": {...}}            # optional provenance, not hashed

Floats are written with ``repr``, which round-trips IEEE doubles exactly.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DataValidationError
from .features import LABEL_NAMES, FeatureConfig, parse_label
from .fsutil import atomic_write_text
from .fusion import TIE_RULE, FusionModel
from .nmf import NmfConfig, NmfModel
from .svm import KernelSpec, SvmModel

SCHEMA_VERSION = 1
KINDS = ("nmf", "svm", "fusion", "report")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def content_hash(payload) -> str:
    return "sha256:" + hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def run_manifest(command: str, config: dict, inputs=()) -> dict:
    """Provenance record: command, resolved config, version, input hashes, timestamp."""
    hashes = {}
    for p in inputs:
        p = Path(p)
        if p.is_file():
            hashes[str(p)] = file_sha256(p)
        elif p.is_dir():
            for f in sorted(q for q in p.iterdir() if q.is_file()):
                hashes[str(f)] = file_sha256(f)
    return {
        "command": command,
        "argv": sys.argv[1:],
        "config": config,
        "tool_version": __version__,
        "input_hashes": hashes,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def _finite_or_none(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _finite_or_none(obj)
    return obj


def envelope(kind: str, payload: dict, manifest: dict | None = None) -> dict:
    if kind not in KINDS:
        raise ValueError(f"unknown artifact kind {kind!r}")
    payload = _to_jsonable(payload)
    env = {
        "schema_version": SCHEMA_VERSION,
        "artifact_kind": kind,
        "payload": payload,
        "content_hash": content_hash(payload),
    }
    if manifest is not None:
        env["manifest"] = _to_jsonable(manifest)
    return env


def write_envelope(path, kind: str, payload: dict, manifest: dict | None = None) -> None:
    env = envelope(kind, payload, manifest)
    atomic_write_text(path, json.dumps(env, indent=1, sort_keys=True, allow_nan=False) + "\n")


def read_envelope(path, kind: str | None = None) -> dict:
    """Validate the envelope and return the payload."""
    try:
        with open(path, encoding="utf-8") as fh:
            env = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataValidationError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(env, dict) or "payload" not in env:
        raise DataValidationError(f"{path}: not an artifact envelope")
    version = env.get("schema_version")
    if version != SCHEMA_VERSION:
        raise DataValidationError(f"{path}: unsupported version {version!r}")
    if kind is not None and env.get("artifact_kind") != kind:
        raise DataValidationError(f"{path}: expected a {kind} artifact, found {env.get('artifact_kind')!r}")
    if content_hash(env["payload"]) != env.get("content_hash"):
        raise DataValidationError(f"{path}: content hash mismatch")
    return env["payload"]


def _require(payload: dict, key: str, kind: str):
    if key not in payload:
        raise DataValidationError(f"{kind}.{key}: missing")
    return payload[key]


def _array(payload, key, kind, ndim) -> np.ndarray:
    try:
        arr = np.asarray(_require(payload, key, kind), dtype=np.float64)
    except (TypeError, ValueError):
        raise DataValidationError(f"{kind}.{key}: not numeric") from None
    if arr.ndim != ndim:
        raise DataValidationError(f"{kind}.{key}: expected {ndim}-D array")
    if not np.all(np.isfinite(arr)):
        raise DataValidationError(f"{kind}.{key}: non-finite values")
    return arr


# -- SVM -------------------------------------------------------------------

def svm_payload(model: SvmModel) -> dict:
    std = None
    if model.feature_mean is not None:
        std = {"means": model.feature_mean, "scales": model.feature_scale}
    return {
        "kernel": model.kernel.to_dict(),
        "C": model.C,
        "bias": model.bias,
        "w_norm": model.w_norm,
        "standardization": std,
        "support_vectors": model.support_vectors,
        "alphas": model.alphas,
        "sv_labels": model.sv_labels,
        "sv_indices": model.sv_indices,
        "warnings": list(model.warnings),
    }


def svm_from_payload(p: dict) -> SvmModel:
    kind = "svm"
    kernel = KernelSpec.from_dict(_require(p, "kernel", kind))
    C = float(_require(p, "C", kind))
    sv = _array(p, "support_vectors", kind, 2)
    alphas = _array(p, "alphas", kind, 1)
    labels = _array(p, "sv_labels", kind, 1)
    if not (sv.shape[0] == alphas.size == labels.size):
        raise DataValidationError("svm.alphas: length differs from support_vectors/sv_labels")
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise DataValidationError("svm.sv_labels: labels must be +1 or -1")
    if not (C > 0):
        raise DataValidationError("svm.C: must be positive")
    if np.any(alphas <= 0) or np.any(alphas > C * (1 + 1e-12)):
        raise DataValidationError("svm.alphas: every alpha must satisfy 0 < alpha <= C")
    if abs(float(alphas @ labels)) > 1e-8 * max(1.0, float(alphas.sum())):
        raise DataValidationError("svm.alphas: sum(alpha * y) must be 0")
    w_norm = float(_require(p, "w_norm", kind))
    if not w_norm > 0:
        raise DataValidationError("svm.w_norm: must be positive")
    mean = scale = None
    std = p.get("standardization")
    if std is not None:
        mean = _array(std, "means", "svm.standardization", 1)
        scale = _array(std, "scales", "svm.standardization", 1)
        if mean.size != sv.shape[1] or scale.size != sv.shape[1] or np.any(scale <= 0):
            raise DataValidationError("svm.standardization: shape mismatch or nonpositive scale")
    idx = p.get("sv_indices")
    return SvmModel(
        support_vectors=sv, alphas=alphas, sv_labels=labels,
        bias=float(_require(p, "bias", kind)), kernel=kernel, C=C, w_norm=w_norm,
        feature_mean=mean, feature_scale=scale,
        warnings=tuple(p.get("warnings", ())),
        sv_indices=None if idx is None else np.asarray(idx, dtype=np.int64),
    )


def save_svm(model: SvmModel, path, manifest: dict | None = None) -> None:
    write_envelope(path, "svm", svm_payload(model), manifest)


def load_svm(path) -> SvmModel:
    return svm_from_payload(read_envelope(path, "svm"))


# -- NMF -------------------------------------------------------------------

def nmf_payload(model: NmfModel) -> dict:
    return {
        "rank": model.rank,
        "rows": model.rows,
        "basis": model.basis.ravel(),
        "column_norms": model.column_norms,
        "config": model.config.to_dict(),
        "train_residual": model.train_residual,
        "representation": model.representation,
    }


def nmf_from_payload(p: dict) -> NmfModel:
    kind = "nmf"
    rank = int(_require(p, "rank", kind))
    rows = int(_require(p, "rows", kind))
    basis = _array(p, "basis", kind, 1)
    if basis.size != rank * rows:
        raise DataValidationError(f"nmf.basis: expected {rank * rows} values, found {basis.size}")
    if np.any(basis < 0):
        raise DataValidationError("nmf.basis: entries must be nonnegative")
    residual = p.get("train_residual")
    return NmfModel(
        basis=basis.reshape(rows, rank),
        config=NmfConfig.from_dict(_require(p, "config", kind)),
        train_residual=float("nan") if residual is None else float(residual),
        representation=p.get("representation") or {},
    )


def save_nmf(model: NmfModel, path, manifest: dict | None = None) -> None:
    write_envelope(path, "nmf", nmf_payload(model), manifest)


def load_nmf(path) -> NmfModel:
    return nmf_from_payload(read_envelope(path, "nmf"))


# -- Fusion bundle ---------------------------------------------------------

def save_fusion(fm: FusionModel, path, manifest: dict | None = None) -> dict[str, Path]:
    """Write the fusion file plus its three component files next to it.

    The fusion payload references the components by relative path.
    """
    path = Path(path)
    stem = path.name[:-len(".fusion.json")] if path.name.endswith(".fusion.json") else path.stem
    parts = {
        "haralick_model": path.with_name(f"{stem}.haralick.svm.json"),
        "nmf_model": path.with_name(f"{stem}.nmf.svm.json"),
        "encoder": path.with_name(f"{stem}.encoder.nmf.json"),
    }
    save_svm(fm.haralick_model, parts["haralick_model"], manifest)
    save_svm(fm.nmf_model, parts["nmf_model"], manifest)
    save_nmf(fm.encoder, parts["encoder"], manifest)
    payload = {k: v.name for k, v in parts.items()}
    payload.update(features=fm.features.to_dict(), tie_rule=fm.tie_rule)
    write_envelope(path, "fusion", payload, manifest)
    parts["fusion"] = path
    return parts


def write_fusion_reference(path, haralick_path, nmf_path, encoder_path,
                           features: FeatureConfig, manifest: dict | None = None) -> None:
    """Fusion file pointing at already-saved component models."""
    path = Path(path)
    base = path.parent.resolve()
    payload = {
        "haralick_model": os.path.relpath(Path(haralick_path).resolve(), base),
        "nmf_model": os.path.relpath(Path(nmf_path).resolve(), base),
        "encoder": os.path.relpath(Path(encoder_path).resolve(), base),
        "features": features.to_dict(),
        "tie_rule": TIE_RULE,
    }
    write_envelope(path, "fusion", payload, manifest)


def load_fusion(path) -> FusionModel:
    path = Path(path)
    p = read_envelope(path, "fusion")
    base = path.parent

    def ref(key):
        return base / _require(p, key, "fusion")

    fm = FusionModel(
        haralick_model=load_svm(ref("haralick_model")),
        nmf_model=load_svm(ref("nmf_model")),
        encoder=load_nmf(ref("encoder")),
        features=FeatureConfig.from_dict(_require(p, "features", "fusion")),
        tie_rule=p.get("tie_rule", TIE_RULE),
    )
    if fm.nmf_model.dim != fm.encoder.rank:
        raise DataValidationError("fusion.nmf_model: input dimension differs from encoder rank")
    return fm


# -- Reports ---------------------------------------------------------------

def save_report(report: dict, path, manifest: dict | None = None) -> None:
    write_envelope(path, "report", report, manifest)


def load_report(path) -> dict:
    return read_envelope(path, "report")


# -- Feature CSV -----------------------------------------------------------

def write_features_csv(path, ids, X, columns, labels=None) -> None:
    """``sample_id, [label,] <columns...>`` with full-precision floats."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    has_labels = labels is not None and all(v is not None for v in labels)
    w.writerow(["sample_id"] + (["label"] if has_labels else []) + list(columns))
    for i, sid in enumerate(ids):
        lead = [sid] + ([LABEL_NAMES[int(labels[i])]] if has_labels else [])
        w.writerow(lead + [repr(float(v)) for v in X[i]])
    atomic_write_text(path, buf.getvalue())


def read_features_csv(path):
    """Returns ``(ids, X, columns, labels)``; ``labels`` is None if absent."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataValidationError(f"{path}: empty feature file") from None
        if not header or header[0] != "sample_id":
            raise DataValidationError(f"{path}: first column must be sample_id")
        has_labels = len(header) > 1 and header[1] == "label"
        start = 2 if has_labels else 1
        columns = header[start:]
        ids, rows, labels = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataValidationError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            ids.append(row[0])
            if has_labels:
                labels.append(parse_label(row[1]))
            try:
                rows.append([float(v) for v in row[start:]])
            except ValueError:
                raise DataValidationError(f"{path}:{lineno}: non-numeric feature value") from None
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(columns))
    return ids, X, columns, (np.array(labels, dtype=int) if has_labels else None)


def write_sidecar_manifest(path, manifest: dict) -> Path:
    side = Path(str(path) + ".manifest.json")
    atomic_write_text(side, json.dumps(_to_jsonable(manifest), indent=1, sort_keys=True) + "\n")
    return side
