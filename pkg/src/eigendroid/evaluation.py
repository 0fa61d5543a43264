"""Stratified k-fold evaluation, confusion metrics and test-to-train mapping."""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import classifier as eig
from . import naive_bayes as nb
from .datasets import DEFAULT_SEED
from .errors import DataError
from .vectors import BENIGN, MALWARE, Dataset

ALGORITHMS = ("eigenspace", "nb")
METRIC_NAMES = ("TPR", "FPR", "TNR", "FNR", "ACC", "ERR")


@dataclass(frozen=True)
class ConfusionCounts:
    """Malware is the positive class."""

    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __add__(self, other):
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_labels(cls, actual, predicted) -> "ConfusionCounts":
        tp = fp = tn = fn = 0
        for a, p in zip(actual, predicted, strict=True):
            if a == MALWARE:
                tp += p == MALWARE
                fn += p != MALWARE
            elif a == BENIGN:
                fp += p == MALWARE
                tn += p != MALWARE
            else:
                raise DataError(f"cannot score an unlabelled sample (label={a!r})")
        return cls(tp, fp, tn, fn)


@dataclass(frozen=True)
class MetricsRow:
    tpr: float
    fpr: float
    tnr: float
    fnr: float
    acc: float
    err: float

    def as_tuple(self):
        return (self.tpr, self.fpr, self.tnr, self.fnr, self.acc, self.err)

    @classmethod
    def mean(cls, rows) -> "MetricsRow":
        rows = list(rows)
        cols = np.array([r.as_tuple() for r in rows], dtype=float)
        return cls(*(float(x) for x in cols.mean(axis=0)))


def compute_metrics(c: ConfusionCounts) -> MetricsRow:
    pos, neg = c.tp + c.fn, c.tn + c.fp
    if pos == 0 or neg == 0:
        raise DataError(f"metrics need both classes in the test set (malware={pos}, benign={neg})")
    acc = (c.tp + c.tn) / (pos + neg)
    return MetricsRow(
        tpr=c.tp / pos,
        fpr=c.fp / neg,
        tnr=c.tn / neg,
        fnr=c.fn / pos,
        acc=acc,
        err=1.0 - acc,
    )


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple  # k tuples of 0-based dataset indices, each sorted ascending
    seed: int

    @property
    def k(self) -> int:
        return len(self.folds)

    def train_indices(self, f: int) -> tuple:
        test = set(self.folds[f])
        n = sum(len(x) for x in self.folds)
        return tuple(i for i in range(n) if i not in test)


def make_folds(dataset: Dataset, k: int = 5, seed: int = DEFAULT_SEED) -> FoldPlan:
    """Stratified partition: each class is shuffled with PCG64(seed)
    (malware first, then benign) and cut into k near-equal runs; fold f
    takes run f of every class.
    """
    if k < 2:
        raise DataError("need at least 2 folds")
    if not dataset.is_labeled:
        raise DataError("fold planning needs every sample labelled")
    rng = np.random.Generator(np.random.PCG64(seed))
    parts = [[] for _ in range(k)]
    for label in (MALWARE, BENIGN):
        idx = np.array([i for i, lab in enumerate(dataset.labels) if lab == label], dtype=np.intp)
        if len(idx) < k:
            raise DataError(f"class {label!r} has {len(idx)} samples, fewer than k={k}")
        idx = idx[rng.permutation(len(idx))]
        for f, chunk in enumerate(np.array_split(idx, k)):
            parts[f].extend(int(i) for i in chunk)
    return FoldPlan(tuple(tuple(sorted(p)) for p in parts), seed)


@dataclass(frozen=True)
class MappingRecord:
    test_index: int  # 1-based position in the test set
    test_app_id: str
    nearest_index: int  # 1-based column of the model's weight matrix
    nearest_app_id: str
    score: float
    test_label: Optional[str]
    nearest_label: str

    @property
    def outcome(self) -> str:
        """TP / TN / FP / FN quadrant, or '' for unlabelled test samples."""
        if self.test_label is None:
            return ""
        if self.test_label == MALWARE:
            return "TP" if self.nearest_label == MALWARE else "FN"
        return "FP" if self.nearest_label == MALWARE else "TN"


def export_mapping(model: eig.EigenspaceModel, test: Dataset, threads: int = 1) -> List[MappingRecord]:
    if test.n_features != model.n_features:
        raise DataError(
            f"test set has {test.n_features} features, model expects {model.n_features}"
        )
    results = eig.classify_batch(model, test, threads=threads)
    return [
        MappingRecord(
            test_index=i + 1,
            test_app_id=test.app_ids[i],
            nearest_index=r.nearest_index,
            nearest_app_id=r.nearest_app_id,
            score=r.score,
            test_label=test.labels[i],
            nearest_label=r.label,
        )
        for i, r in enumerate(results)
    ]


def mapping_counts(records) -> ConfusionCounts:
    outcomes = [r.outcome for r in records]
    return ConfusionCounts(
        tp=outcomes.count("TP"),
        fp=outcomes.count("FP"),
        tn=outcomes.count("TN"),
        fn=outcomes.count("FN"),
    )


MAPPING_HEADER = (
    "test_index", "test_app_id", "test_label",
    "nearest_index", "nearest_app_id", "nearest_label",
    "score", "outcome",
)


def _mapping_row(r):
    return [
        r.test_index, r.test_app_id, r.test_label or "",
        r.nearest_index, r.nearest_app_id, r.nearest_label,
        repr(r.score), r.outcome,
    ]


def write_mapping(records, destination) -> None:
    own = not hasattr(destination, "write")
    fh = open(destination, "w", encoding="utf-8", newline="") if own else destination
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MAPPING_HEADER)
        w.writerows(_mapping_row(r) for r in records)
    finally:
        if own:
            fh.close()


def write_fold_mappings(folds, fh) -> None:
    """All folds' mappings in one CSV with a leading ``fold`` column."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(("fold",) + MAPPING_HEADER)
    for f in folds:
        w.writerows([f.fold, *_mapping_row(r)] for r in f.mapping)


@dataclass
class FoldResult:
    fold: int  # 1-based
    counts: ConfusionCounts
    metrics: MetricsRow
    n_components: Optional[int] = None  # N' of the eigenspace model
    mapping: List[MappingRecord] = field(default_factory=list, repr=False)


@dataclass
class EvaluationReport:
    algorithm: str
    k: int
    seed: int
    variance_threshold: Optional[float]
    folds: List[FoldResult]

    @property
    def mean(self) -> MetricsRow:
        """Unweighted mean of the per-fold ratios."""
        return MetricsRow.mean(f.metrics for f in self.folds)

    @property
    def pooled_counts(self) -> ConfusionCounts:
        total = ConfusionCounts()
        for f in self.folds:
            total = total + f.counts
        return total

    @property
    def pooled(self) -> MetricsRow:
        return compute_metrics(self.pooled_counts)

    def rows(self):
        """Report table: one row per fold, then the averaged row."""
        header = ("fold", "algorithm", "n_components", "TP", "FP", "TN", "FN", *METRIC_NAMES)
        out = [header]
        for f in self.folds:
            c = f.counts
            out.append((
                str(f.fold), self.algorithm,
                "" if f.n_components is None else str(f.n_components),
                str(c.tp), str(c.fp), str(c.tn), str(c.fn),
                *(repr(x) for x in f.metrics.as_tuple()),
            ))
        c = self.pooled_counts
        out.append((
            "mean", self.algorithm, "",
            str(c.tp), str(c.fp), str(c.tn), str(c.fn),
            *(repr(x) for x in self.mean.as_tuple()),
        ))
        return out

    def write_csv(self, destination) -> None:
        own = not hasattr(destination, "write")
        fh = open(destination, "w", encoding="utf-8", newline="") if own else destination
        try:
            csv.writer(fh, lineterminator="\n").writerows(self.rows())
        finally:
            if own:
                fh.close()


def _run_fold(dataset, plan, f, algorithm, variance_threshold, alpha):
    train_set = dataset.subset(plan.train_indices(f))
    # malware-first test order mirrors the layout of the weight matrix
    test_set = dataset.subset(plan.folds[f]).malware_first()
    mapping = []
    n_components = None
    if algorithm == "eigenspace":
        model = eig.train(train_set, variance_threshold)
        mapping = export_mapping(model, test_set)
        predicted = [m.nearest_label for m in mapping]
        n_components = model.n_components
    else:
        model = nb.nb_train(train_set, alpha)
        predicted = [r.label for r in eig.classify_batch(model, test_set, classify_fn=nb.nb_classify)]
    counts = ConfusionCounts.from_labels(test_set.labels, predicted)
    return FoldResult(f + 1, counts, compute_metrics(counts), n_components, mapping)


def cross_validate(
    dataset: Dataset,
    k: int = 5,
    seed: int = DEFAULT_SEED,
    variance_threshold: float = eig.DEFAULT_VARIANCE,
    algorithm: str = "eigenspace",
    alpha: float = 1.0,
    threads: int = 1,
    plan: Optional[FoldPlan] = None,
) -> EvaluationReport:
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    plan = plan or make_folds(dataset, k, seed)
    def run(f):
        return _run_fold(dataset, plan, f, algorithm, variance_threshold, alpha)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            folds = list(pool.map(run, range(plan.k)))
    else:
        folds = [run(f) for f in range(plan.k)]
    return EvaluationReport(
        algorithm=algorithm,
        k=plan.k,
        seed=plan.seed,
        variance_threshold=variance_threshold if algorithm == "eigenspace" else None,
        folds=folds,
    )
