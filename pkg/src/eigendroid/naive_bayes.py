"""Bernoulli naive Bayes baseline over the same binary vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifier import ClassificationResult
from .errors import DataError, ModelFormatError
from .vectors import BENIGN, MALWARE, Dataset, FeatureVector


@dataclass(frozen=True, eq=False)
class NaiveBayesModel:
    feature_names: tuple
    priors: dict  # label -> prior probability
    theta: dict  # label -> per-feature P(f_i = 1 | class)
    alpha: float

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


def nb_train(data: Dataset, alpha: float = 1.0) -> NaiveBayesModel:
    """Laplace-smoothed estimates: (count(f=1 in c) + alpha) / (|c| + 2 alpha)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if not data.is_labeled:
        raise DataError("every training vector needs a label")
    mal = data.label_array()
    if mal.all() or not mal.any():
        raise DataError("naive Bayes needs both classes present")
    k = len(data)
    priors, theta = {}, {}
    for label, mask in ((MALWARE, mal), (BENIGN, ~mal)):
        rows = data.matrix[mask]
        priors[label] = mask.sum() / k
        theta[label] = (rows.sum(axis=0) + alpha) / (rows.shape[0] + 2 * alpha)
    return NaiveBayesModel(data.feature_names, priors, theta, float(alpha))


def log_posteriors(model: NaiveBayesModel, v) -> dict:
    x = np.asarray(v.values if isinstance(v, FeatureVector) else v, dtype=float)
    if x.ndim != 1 or x.shape[0] != model.n_features:
        raise DataError(f"vector has {x.shape} features, model expects {model.n_features}")
    out = {}
    for label in (MALWARE, BENIGN):
        t = model.theta[label]
        out[label] = float(
            np.log(model.priors[label]) + np.sum(x * np.log(t) + (1 - x) * np.log1p(-t))
        )
    return out


def nb_classify(model: NaiveBayesModel, v) -> ClassificationResult:
    """Score carries the malware-minus-benign log-posterior margin; ties go to malware."""
    lp = log_posteriors(model, v)
    margin = lp[MALWARE] - lp[BENIGN]
    label = MALWARE if margin >= 0 else BENIGN
    return ClassificationResult(label=label, score=margin, nearest_index=None)


NB_FORMAT = "eigendroid-nb-model"
NB_VERSION = 1


def nb_to_dict(model: NaiveBayesModel) -> dict:
    return {
        "format": NB_FORMAT,
        "version": NB_VERSION,
        "alpha": model.alpha,
        "feature_names": list(model.feature_names),
        "priors": {k: float(v) for k, v in model.priors.items()},
        "theta": {k: [float(x) for x in v] for k, v in model.theta.items()},
    }


def nb_from_dict(doc) -> NaiveBayesModel:
    if not isinstance(doc, dict) or doc.get("format") != NB_FORMAT:
        raise ModelFormatError("not a naive Bayes model document")
    if doc.get("version") != NB_VERSION:
        raise ModelFormatError(f"unsupported naive Bayes model version {doc.get('version')!r}")
    try:
        names = tuple(doc["feature_names"])
        priors = {lab: float(doc["priors"][lab]) for lab in (MALWARE, BENIGN)}
        theta = {lab: np.array(doc["theta"][lab], dtype=float) for lab in (MALWARE, BENIGN)}
        alpha = float(doc["alpha"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"naive Bayes model is incomplete: {exc}") from None
    for t in theta.values():
        if t.shape != (len(names),) or not ((t > 0) & (t < 1)).all():
            raise ModelFormatError("naive Bayes parameters must lie strictly inside (0, 1)")
    if abs(sum(priors.values()) - 1.0) > 1e-12 or min(priors.values()) <= 0:
        raise ModelFormatError("naive Bayes priors must be positive and sum to 1")
    return NaiveBayesModel(names, priors, theta, alpha)
