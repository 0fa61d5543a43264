"""Eigenspace model: training, nearest-weight classification, persistence.

Training centers the K training vectors on their mean, takes the
eigenvectors of C = A A^T covering the requested share of variance and
stores every training sample's weight vector (its coordinates in that
basis). A query is centered on the *training* mean, projected the same
way, and assigned the label of the training sample at minimum Euclidean
distance in weight space. Malware samples are stored first, so the
verdict reduces to comparing the nearest index with the malware count.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DataError, DegenerateError, ModelFormatError, RegimeError
from .linalg import (
    EigenPairs,
    center,
    compute_mean,
    covariance,
    eigendecompose,
    n_components_for_variance,
    project,
)
from .vectors import BENIGN, MALWARE, Dataset, FeatureVector

MODEL_FORMAT = "eigendroid-model"
MODEL_VERSION = 1

DEFAULT_VARIANCE = 0.95

# Scores within this relative distance of the minimum count as tied; the
# smallest index among tied columns wins.
TIE_RTOL = 1e-9


@dataclass(frozen=True)
class ClassificationResult:
    label: str
    score: float
    nearest_index: Optional[int]  # 1-based; None for models without neighbours
    nearest_app_id: Optional[str] = None


@dataclass(frozen=True, eq=False)
class EigenspaceModel:
    feature_names: tuple
    catalog_version: str
    mean: np.ndarray
    basis: EigenPairs
    spectrum: np.ndarray  # full eigenvalue list before truncation
    weights: np.ndarray  # K x N' ; row i is the weight vector of sample i
    labels: tuple
    app_ids: tuple
    threshold_index: int
    variance_threshold: float

    def __post_init__(self):
        k = len(self.labels)
        n = len(self.feature_names)
        if self.mean.shape != (n,) or self.basis.dim != n:
            raise DataError("mean/basis dimension does not match feature count")
        if self.weights.shape != (k, len(self.basis)):
            raise DataError(
                f"weight matrix shape {self.weights.shape} != ({k}, {len(self.basis)})"
            )
        if len(self.app_ids) != k:
            raise DataError("app id count does not match weight columns")
        expected = tuple([MALWARE] * self.threshold_index + [BENIGN] * (k - self.threshold_index))
        if tuple(self.labels) != expected:
            raise DataError("labels must be malware-first with threshold_index malware entries")

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def n_components(self) -> int:
        return len(self.basis)

    @property
    def n_samples(self) -> int:
        return len(self.labels)

    def label_for_index(self, p: int) -> str:
        """Verdict for a 1-based nearest index: malware iff p <= threshold."""
        return MALWARE if p <= self.threshold_index else BENIGN

    def weight_vector(self, v) -> np.ndarray:
        x = np.asarray(v.values if isinstance(v, FeatureVector) else v, dtype=float)
        if x.ndim != 1 or x.shape[0] != self.n_features:
            raise DataError(
                f"vector has {x.shape[0] if x.ndim == 1 else x.shape} features, "
                f"model expects {self.n_features}"
            )
        return project(x - self.mean, self.basis)

    def scores(self, v) -> np.ndarray:
        """Euclidean distance from ``v``'s weight vector to every training column."""
        w = self.weight_vector(v)
        diff = self.weights - w
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def _check_training_set(data: Dataset, require_n_le_k: bool):
    if not data.is_labeled:
        raise DataError("every training vector needs a label")
    counts = data.class_counts()
    if counts[MALWARE] < 1 or counts[BENIGN] < 1:
        raise DataError(
            f"training needs both classes (malware={counts[MALWARE]}, benign={counts[BENIGN]})"
        )
    n, k = data.n_features, len(data)
    if require_n_le_k and n > k:
        raise RegimeError(f"{n} features but only {k} training samples; need N <= K")
    if (data.matrix == data.matrix[0]).all():
        raise DegenerateError("all training vectors are identical (zero covariance)")


def train(
    data: Dataset,
    variance_threshold: float = DEFAULT_VARIANCE,
    catalog_version: str = "unversioned",
    require_n_le_k: bool = True,
) -> EigenspaceModel:
    """Fit the eigenspace model on a labelled dataset.

    The N x N covariance route is only used with at least as many samples
    as features; pass ``require_n_le_k=False`` to accept wide data anyway
    (the spectrum then carries N - K + 1 or more zero eigenvalues, which
    variance selection discards).
    """
    _check_training_set(data, require_n_le_k)
    data = data.malware_first()
    phi = data.matrix.T.astype(float)  # N x K
    mean = compute_mean(phi)
    a = center(phi, mean)
    pairs = eigendecompose(covariance(a))
    n_keep = n_components_for_variance(pairs.values, variance_threshold)
    basis = pairs.truncate(n_keep)
    # per-sample projection, identical arithmetic to classify()
    weights = np.vstack([project(row.astype(float) - mean, basis) for row in data.matrix])
    return EigenspaceModel(
        feature_names=data.feature_names,
        catalog_version=catalog_version,
        mean=mean,
        basis=basis,
        spectrum=pairs.values,
        weights=weights,
        labels=data.labels,
        app_ids=data.app_ids,
        threshold_index=data.class_counts()[MALWARE],
        variance_threshold=float(variance_threshold),
    )


def nearest(scores: np.ndarray) -> int:
    """0-based argmin, treating near-equal scores as ties broken by index."""
    best = float(scores.min())
    tied = np.flatnonzero(scores <= best + TIE_RTOL * max(1.0, best))
    return int(tied[0])


def classify(model: EigenspaceModel, v) -> ClassificationResult:
    s = model.scores(v)
    i = nearest(s)
    return ClassificationResult(
        label=model.labels[i],
        score=float(s[i]),
        nearest_index=i + 1,
        nearest_app_id=model.app_ids[i],
    )


def classify_batch(model, vectors: Sequence, threads: int = 1, classify_fn=None) -> list:
    """Classify in input order. Dimension errors name every offending index."""
    fn = classify_fn or classify
    vectors = list(vectors)
    n = model.n_features
    bad = [i for i, v in enumerate(vectors) if len(v) != n]
    if bad:
        shown = ", ".join(str(i) for i in bad[:10])
        more = "" if len(bad) <= 10 else f" (+{len(bad) - 10} more)"
        raise DataError(f"dimension mismatch (model N={n}) at indices {shown}{more}")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda v: fn(model, v), vectors))
    return [fn(model, v) for v in vectors]


# ---- persistence -----------------------------------------------------------


def _floats(a) -> list:
    return [float(x) for x in np.asarray(a, dtype=float).ravel()]


def model_to_dict(model: EigenspaceModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "catalog_version": model.catalog_version,
        "variance_threshold": model.variance_threshold,
        "feature_names": list(model.feature_names),
        "mean": _floats(model.mean),
        "spectrum": _floats(model.spectrum),
        "eigenvalues": _floats(model.basis.values),
        "eigenvectors": [_floats(r) for r in model.basis.vectors],
        "threshold_index": model.threshold_index,
        "labels": list(model.labels),
        "app_ids": list(model.app_ids),
        "weights": [_floats(r) for r in model.weights],
    }


def _array(doc, key, shape):
    try:
        arr = np.array(doc[key], dtype=float)
    except KeyError:
        raise ModelFormatError(f"model document lacks {key!r}") from None
    except (TypeError, ValueError):
        raise ModelFormatError(f"model field {key!r} is not numeric") from None
    if arr.size == 0 and 0 in shape:
        arr = arr.reshape(shape)
    if arr.shape != shape:
        raise ModelFormatError(f"model field {key!r} has shape {arr.shape}, expected {shape}")
    if not np.isfinite(arr).all():
        raise ModelFormatError(f"model field {key!r} has non-finite values")
    return arr


def model_from_dict(doc) -> EigenspaceModel:
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError("not an eigenspace model document")
    if doc.get("version") != MODEL_VERSION:
        raise ModelFormatError(
            f"unsupported model version {doc.get('version')!r} (expected {MODEL_VERSION})"
        )
    try:
        names = tuple(doc["feature_names"])
        labels = tuple(doc["labels"])
        app_ids = tuple(doc["app_ids"])
        thr = doc["threshold_index"]
        var = float(doc["variance_threshold"])
        cat_version = str(doc.get("catalog_version", "unversioned"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"model document is incomplete: {exc}") from None
    if not isinstance(thr, int):
        raise ModelFormatError("threshold_index must be an integer")
    n, k = len(names), len(labels)
    values = np.array(doc.get("eigenvalues", []), dtype=float)
    n_keep = values.shape[0] if values.ndim == 1 else -1
    if n_keep < 1:
        raise ModelFormatError("model has no eigenvalues")
    mean = _array(doc, "mean", (n,))
    vectors = _array(doc, "eigenvectors", (n_keep, n))
    spectrum = _array(doc, "spectrum", (n,))
    weights = _array(doc, "weights", (k, n_keep))
    basis = EigenPairs(values, vectors)
    gram = vectors @ vectors.T
    if np.abs(gram - np.eye(n_keep)).max() > 1e-8:
        raise ModelFormatError("stored eigenvectors are not orthonormal")
    if np.any(np.diff(values) > 0):
        raise ModelFormatError("stored eigenvalues are not sorted descending")
    try:
        return EigenspaceModel(
            feature_names=names,
            catalog_version=cat_version,
            mean=mean,
            basis=basis,
            spectrum=spectrum,
            weights=weights,
            labels=labels,
            app_ids=app_ids,
            threshold_index=thr,
            variance_threshold=var,
        )
    except DataError as exc:
        raise ModelFormatError(f"model violates invariants: {exc}") from None


def save_model(model: EigenspaceModel, destination) -> None:
    """Write the model as JSON. Floats use shortest round-trip repr (<= 17 digits)."""
    doc = model_to_dict(model)
    if hasattr(destination, "write"):
        json.dump(doc, destination, indent=1)
        destination.write("\n")
        return
    with open(destination, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(source) -> EigenspaceModel:
    try:
        if hasattr(source, "read"):
            doc = json.load(source)
        else:
            with open(source, encoding="utf-8") as fh:
                doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model document does not parse: {exc}") from None
    return model_from_dict(doc)
