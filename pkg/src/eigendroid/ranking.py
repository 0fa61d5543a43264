"""Gain-ratio ranking of binary features against class labels."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DataError
from .features import FeatureCatalog
from .vectors import Dataset


def entropy(values) -> float:
    """Shannon entropy in bits of the empirical distribution of ``values``."""
    counts = np.array(list(Counter(values).values()), dtype=float)
    if counts.size == 0:
        return 0.0
    p = counts / counts.sum()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def gain_ratio(feature, labels) -> float:
    """Information gain of ``feature`` about ``labels`` over the feature's own
    entropy (split information). Constant features score 0.
    """
    f = list(np.asarray(feature).tolist())
    y = list(labels)
    if len(f) != len(y):
        raise DataError(f"feature has {len(f)} values but there are {len(y)} labels")
    if not f:
        raise DataError("gain ratio needs at least one sample")
    split_info = entropy(f)
    if split_info == 0.0:
        return 0.0
    n = len(f)
    conditional = 0.0
    for value, count in Counter(f).items():
        subset = [lab for fv, lab in zip(f, y) if fv == value]
        conditional += count / n * entropy(subset)
    gain = entropy(y) - conditional
    # guard tiny negative rounding on useless features
    return max(gain, 0.0) / split_info


def _binary_gain_ratios(matrix: np.ndarray, is_malware: np.ndarray) -> np.ndarray:
    """Vectorised gain ratio for every column of a K x N 0/1 matrix."""

    def h(p):
        p = np.asarray(p, dtype=float)
        out = np.zeros_like(p)
        m = (p > 0) & (p < 1)
        q = p[m]
        out[m] = -(q * np.log2(q) + (1 - q) * np.log2(1 - q))
        return out

    k = matrix.shape[0]
    x = matrix.astype(bool)
    ones = x.sum(axis=0).astype(float)
    zeros = k - ones
    mal_ones = (x & is_malware[:, None]).sum(axis=0).astype(float)
    mal_zeros = is_malware.sum() - mal_ones
    with np.errstate(divide="ignore", invalid="ignore"):
        h1 = h(np.where(ones > 0, mal_ones / ones, 0.0))
        h0 = h(np.where(zeros > 0, mal_zeros / zeros, 0.0))
    h_class = float(h(is_malware.mean()))
    gain = h_class - (ones / k) * h1 - (zeros / k) * h0
    split = h(ones / k)
    out = np.zeros(matrix.shape[1])
    nz = split > 0
    out[nz] = np.maximum(gain[nz], 0.0) / split[nz]
    return out


@dataclass(frozen=True)
class RankedFeatures:
    """(name, score) pairs, non-increasing by score; ties keep catalog order."""

    names: tuple
    scores: tuple
    indices: tuple  # original catalog index of each ranked feature

    def __len__(self):
        return len(self.names)

    def __iter__(self):
        return iter(zip(self.names, self.scores))


def rank_features(dataset: Dataset, catalog: Optional[FeatureCatalog] = None) -> RankedFeatures:
    names = catalog.names if catalog is not None else dataset.feature_names
    if tuple(names) != tuple(dataset.feature_names):
        raise DataError("dataset columns do not match the catalog")
    if len(dataset) == 0:
        raise DataError("cannot rank features on an empty dataset")
    if not dataset.is_labeled:
        raise DataError("ranking needs every sample labelled")
    mal = dataset.label_array()
    if mal.all() or not mal.any():
        raise DataError("ranking needs both classes present")
    scores = _binary_gain_ratios(dataset.matrix, mal)
    order = sorted(range(len(names)), key=lambda i: -scores[i])  # stable
    return RankedFeatures(
        tuple(names[i] for i in order),
        tuple(float(scores[i]) for i in order),
        tuple(order),
    )


def select_top(
    ranked: RankedFeatures,
    k: int,
    dataset: Dataset,
    catalog: Optional[FeatureCatalog] = None,
):
    """Keep the top ``k`` features in rank order.

    Returns ``(reduced_catalog, reduced_dataset)``; the catalog is None when
    none was given.
    """
    n = len(ranked)
    if not 1 <= k <= n:
        raise DataError(f"k must be within 1..{n}, got {k}")
    keep = ranked.indices[:k]
    reduced = dataset.select_features(keep)
    reduced_catalog = None
    if catalog is not None:
        reduced_catalog = catalog.subset(keep, version=f"{catalog.version}+top{k}")
    return reduced_catalog, reduced
