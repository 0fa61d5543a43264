"""Binary feature vectors and the labelled dataset container."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DataError

MALWARE = "malware"
BENIGN = "benign"
LABELS = (MALWARE, BENIGN)


def _as_binary(values, what="vector") -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype == bool:
        arr = arr.astype(np.uint8)
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise DataError(f"{what} entries must be 0 or 1")
    out = arr.astype(np.uint8)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Presence/absence characterization of one application."""

    app_id: str
    values: np.ndarray
    label: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "values", _as_binary(self.values))
        if self.values.ndim != 1:
            raise DataError("feature vector must be one-dimensional")
        if self.label is not None and self.label not in LABELS:
            raise DataError(f"unknown label {self.label!r}; expected one of {LABELS}")

    def __len__(self):
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return (
            self.app_id == other.app_id
            and self.label == other.label
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.app_id, self.label, self.values.tobytes()))


@dataclass(frozen=True, eq=False)
class Dataset(Sequence):
    """K feature vectors over a shared, ordered list of N feature names.

    ``matrix`` is stored sample-major (K x N, uint8); the column-per-sample
    matrix used in training is its transpose.
    """

    feature_names: tuple
    matrix: np.ndarray
    app_ids: tuple
    labels: tuple = field(default=None)

    def __post_init__(self):
        names = tuple(self.feature_names)
        matrix = _as_binary(self.matrix, "dataset")
        if matrix.ndim != 2:
            raise DataError("dataset matrix must be two-dimensional")
        if matrix.shape[1] != len(names):
            raise DataError(
                f"dataset has {matrix.shape[1]} columns but {len(names)} feature names"
            )
        ids = tuple(str(a) for a in self.app_ids)
        if len(ids) != matrix.shape[0]:
            raise DataError("app id count does not match number of rows")
        seen = set()
        for app_id in ids:
            if app_id in seen:
                raise DataError(f"duplicate app id {app_id!r}")
            seen.add(app_id)
        labels = self.labels
        labels = (None,) * len(ids) if labels is None else tuple(labels)
        if len(labels) != len(ids):
            raise DataError("label count does not match number of rows")
        for lab in labels:
            if lab is not None and lab not in LABELS:
                raise DataError(f"unknown label {lab!r}; expected one of {LABELS}")
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "app_ids", ids)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_vectors(cls, vectors: Iterable[FeatureVector], feature_names) -> "Dataset":
        vectors = list(vectors)
        names = tuple(feature_names)
        if vectors:
            matrix = np.vstack([v.values for v in vectors])
        else:
            matrix = np.zeros((0, len(names)), dtype=np.uint8)
        return cls(
            names,
            matrix,
            [v.app_id for v in vectors],
            [v.label for v in vectors],
        )

    def __len__(self):
        return self.matrix.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return self.subset(range(len(self))[i])
        return FeatureVector(self.app_ids[i], self.matrix[i], self.labels[i])

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.feature_names == other.feature_names
            and self.app_ids == other.app_ids
            and self.labels == other.labels
            and np.array_equal(self.matrix, other.matrix)
        )

    __hash__ = None

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def is_labeled(self) -> bool:
        return len(self) > 0 and all(lab is not None for lab in self.labels)

    @property
    def has_labels(self) -> bool:
        return any(lab is not None for lab in self.labels)

    def label_array(self) -> np.ndarray:
        """Boolean array, True where the sample is malware."""
        return np.array([lab == MALWARE for lab in self.labels], dtype=bool)

    def class_counts(self) -> dict:
        return {lab: sum(1 for x in self.labels if x == lab) for lab in LABELS}

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(list(indices), dtype=np.intp)
        return Dataset(
            self.feature_names,
            self.matrix[idx],
            [self.app_ids[i] for i in idx],
            [self.labels[i] for i in idx],
        )

    def select_features(self, columns) -> "Dataset":
        cols = np.asarray(list(columns), dtype=np.intp)
        return Dataset(
            [self.feature_names[c] for c in cols],
            self.matrix[:, cols],
            self.app_ids,
            self.labels,
        )

    def malware_first(self) -> "Dataset":
        """Stable reorder putting every malware sample before every benign one."""
        mal = [i for i, lab in enumerate(self.labels) if lab == MALWARE]
        rest = [i for i, lab in enumerate(self.labels) if lab != MALWARE]
        return self.subset(mal + rest)
