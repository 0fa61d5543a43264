"""Dataset CSV reading/writing and the seeded synthetic two-class generator.

CSV layout (UTF-8, ``,`` delimiter, ``\\n`` line endings, minimal quoting
per RFC 4180)::

    app_id,<feature 1>,...,<feature N>[,label]
    app-0001,0,1,...,0,malware

The label column is present iff at least one row carries a label; an empty
cell in that column means "unlabelled".
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DataError
from .vectors import BENIGN, LABELS, MALWARE, Dataset

LABEL_COLUMN = "label"
ID_COLUMN = "app_id"
DEFAULT_SEED = 20150101


def read_dataset(source, expected_names: Optional[Sequence[str]] = None) -> Dataset:
    """Read a dataset CSV from a path or text stream, preserving row order.

    ``expected_names`` (e.g. ``catalog.names``) must equal the header's
    feature columns when given.
    """
    if hasattr(source, "read"):
        return _parse(source, expected_names, "<stream>")
    with open(source, encoding="utf-8", newline="") as fh:
        return _parse(fh, expected_names, str(source))


def _parse(fh, expected_names, where) -> Dataset:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{where}: empty dataset file") from None
    if not header or header[0] != ID_COLUMN:
        raise DataError(f"{where}: first header column must be {ID_COLUMN!r}")
    labeled = header[-1] == LABEL_COLUMN
    names = header[1:-1] if labeled else header[1:]
    if not names:
        raise DataError(f"{where}: header declares no feature columns")
    if len(set(names)) != len(names):
        raise DataError(f"{where}: duplicate feature names in header")
    if expected_names is not None and tuple(names) != tuple(expected_names):
        raise DataError(f"{where}: header does not match the catalog feature names")
    width = len(header)
    n = len(names)
    ids, rows, labels = [], [], []
    seen = set()
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != width:
            raise DataError(f"{where}:{lineno}: expected {width} fields, found {len(row)}")
        app_id = row[0]
        if not app_id:
            raise DataError(f"{where}:{lineno}: empty app id")
        if app_id in seen:
            raise DataError(f"{where}:{lineno}: duplicate app id {app_id!r}")
        seen.add(app_id)
        vals = row[1 : 1 + n]
        for j, cell in enumerate(vals):
            if cell not in ("0", "1"):
                raise DataError(
                    f"{where}:{lineno}: column {names[j]!r} has non-binary value {cell!r}"
                )
        lab = None
        if labeled:
            lab = row[-1] or None
            if lab is not None and lab not in LABELS:
                raise DataError(f"{where}:{lineno}: unknown label {lab!r}")
        ids.append(app_id)
        rows.append([c == "1" for c in vals])
        labels.append(lab)
    matrix = np.array(rows, dtype=np.uint8).reshape(len(rows), n)
    return Dataset(names, matrix, ids, labels)


def format_dataset(data: Dataset) -> str:
    buf = io.StringIO()
    _write(buf, data)
    return buf.getvalue()


def _write(fh, data: Dataset) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    labeled = data.has_labels
    header = [ID_COLUMN, *data.feature_names]
    if labeled:
        header.append(LABEL_COLUMN)
    writer.writerow(header)
    for i in range(len(data)):
        row = [data.app_ids[i], *("1" if x else "0" for x in data.matrix[i])]
        if labeled:
            row.append(data.labels[i] or "")
        writer.writerow(row)


def write_dataset(data: Dataset, destination) -> None:
    if hasattr(destination, "write"):
        _write(destination, data)
        return
    with open(destination, "w", encoding="utf-8", newline="") as fh:
        _write(fh, data)


@dataclass
class SyntheticSpec:
    """Two-class Bernoulli dataset description.

    Either give explicit per-class probabilities (length-N sequences) or
    let the separation profile build them: on ``informative`` features
    malware fires with probability 0.5 + delta and benign with 0.5 - delta;
    every other feature fires with 0.5 in both classes.
    """

    n_features: int = 100
    n_malware: int = 500
    n_benign: int = 500
    informative: int = 30
    delta: float = 0.35
    seed: int = DEFAULT_SEED
    malware_probs: Optional[Sequence[float]] = None
    benign_probs: Optional[Sequence[float]] = None
    feature_names: Optional[Sequence[str]] = field(default=None)


def _validate(spec: SyntheticSpec):
    if spec.n_features < 1:
        raise DataError("need at least one feature")
    if spec.n_malware < 1 or spec.n_benign < 1:
        raise DataError("need at least one sample per class")
    if (spec.malware_probs is None) != (spec.benign_probs is None):
        raise DataError("give both per-class probability vectors or neither")
    if spec.malware_probs is None:
        if not 0 <= spec.informative <= spec.n_features:
            raise DataError("informative count must be within 0..n_features")
        if not 0.0 <= spec.delta <= 0.5:
            raise DataError("delta must lie in [0, 0.5]")
    if spec.feature_names is not None and len(spec.feature_names) != spec.n_features:
        raise DataError("feature_names length must equal n_features")


def class_probabilities(spec: SyntheticSpec):
    """Per-class firing probabilities and the informative feature indices.

    With the separation profile, the informative subset is the first
    ``informative`` entries of ``PCG64(seed).permutation(N)``, sorted.
    """
    _validate(spec)
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    n = spec.n_features
    if spec.malware_probs is not None:
        pm = np.asarray(spec.malware_probs, dtype=float)
        pb = np.asarray(spec.benign_probs, dtype=float)
        if pm.shape != (n,) or pb.shape != (n,):
            raise DataError("probability vectors must have length n_features")
        if not ((pm >= 0) & (pm <= 1) & (pb >= 0) & (pb <= 1)).all():
            raise DataError("probabilities must lie in [0, 1]")
        return pm, pb, np.flatnonzero(pm != pb), rng
    informative = np.sort(rng.permutation(n)[: spec.informative])
    pm = np.full(n, 0.5)
    pb = np.full(n, 0.5)
    pm[informative] = 0.5 + spec.delta
    pb[informative] = 0.5 - spec.delta
    return pm, pb, informative, rng


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Draw a labelled dataset; malware rows first, then benign.

    Sampling uses numpy's PCG64 bit generator seeded with ``spec.seed``:
    after the informative-subset permutation (profile mode only), one
    ``random((M + B, N))`` block of uniforms is drawn and entry (r, i) is 1
    iff its uniform is below the row class's probability for feature i.
    """
    pm, pb, _, rng = class_probabilities(spec)
    m, b, n = spec.n_malware, spec.n_benign, spec.n_features
    u = rng.random((m + b, n))
    probs = np.vstack([np.broadcast_to(pm, (m, n)), np.broadcast_to(pb, (b, n))])
    matrix = (u < probs).astype(np.uint8)
    width = max(4, len(str(max(m, b))))
    ids = [f"mal-{i + 1:0{width}d}" for i in range(m)] + [
        f"ben-{i + 1:0{width}d}" for i in range(b)
    ]
    names = spec.feature_names or [f"f{i + 1:03d}" for i in range(n)]
    labels = [MALWARE] * m + [BENIGN] * b
    return Dataset(names, matrix, ids, labels)
