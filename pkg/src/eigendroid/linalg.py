"""Mean/centering, covariance, symmetric eigendecomposition and projection.

Matrices follow the column-per-sample convention: an N x K array holds K
feature vectors of dimension N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConvergenceError, DataError, DegenerateError

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class EigenPairs:
    """Eigenvalues (descending) and matching unit eigenvectors.

    ``vectors`` is an (n_pairs x N) array; row ``j`` is the eigenvector of
    ``values[j]``.
    """

    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        vectors = np.asarray(self.vectors, dtype=float)
        if vectors.ndim != 2 or values.ndim != 1 or vectors.shape[0] != values.shape[0]:
            raise DataError("eigenvector rows must match eigenvalue count")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "vectors", vectors)

    def __len__(self):
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def truncate(self, n: int) -> "EigenPairs":
        return EigenPairs(self.values[:n].copy(), self.vectors[:n].copy())


def _as_columns(m) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise DataError("feature matrix must be two-dimensional (N x K)")
    return a


def compute_mean(m) -> np.ndarray:
    """Entry-wise mean over the K columns of an N x K matrix."""
    a = _as_columns(m)
    if a.shape[0] == 0 or a.shape[1] == 0:
        raise DataError("cannot take the mean of an empty matrix")
    return a.sum(axis=1) / a.shape[1]


def center(m, mean) -> np.ndarray:
    a = _as_columns(m)
    mu = np.asarray(mean, dtype=float)
    if mu.ndim != 1 or mu.shape[0] != a.shape[0]:
        raise DataError(
            f"mean has dimension {mu.shape} but matrix rows are {a.shape[0]}"
        )
    return a - mu[:, None]


def covariance(a) -> np.ndarray:
    """C = A A^T for an already-centered N x K matrix (no 1/K factor)."""
    a = _as_columns(a)
    c = a @ a.T
    # exact symmetry; the product is symmetric up to rounding only
    return (c + c.T) / 2.0


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(off * off)))


def eigendecompose(c, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS) -> EigenPairs:
    """Cyclic Jacobi eigendecomposition of a real symmetric matrix.

    Sweeps visit (p, q) pairs in row-major order and stop once the
    off-diagonal Frobenius norm is at most ``tol * ||C||_F``. Eigenpairs are
    stably sorted by descending eigenvalue and each eigenvector is signed so
    its largest-magnitude component is positive.
    """
    a = np.array(c, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DataError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n == 0:
        raise DataError("cannot decompose an empty matrix")
    if not np.isfinite(a).all():
        raise DataError("matrix contains non-finite entries")
    scale = max(1.0, float(np.abs(a).max()))
    asym = float(np.abs(a - a.T).max())
    if asym > SYMMETRY_TOL * scale:
        raise DataError(f"matrix is not symmetric (max |C - C^T| = {asym:.3e})")
    a = (a + a.T) / 2.0

    v = np.eye(n)
    fro = float(np.linalg.norm(a))
    target = tol * fro
    off = _off_norm(a)
    sweeps = 0
    while off > target:
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps "
                f"(off-diagonal norm {off:.3e}, target {target:.3e})",
                off_norm=off,
            )
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app, aqq = a[p, p], a[q, q]
                # below rounding of both diagonal entries: zero it, no rotation
                g = 100.0 * abs(apq)
                if abs(app) + g == abs(app) and abs(aqq) + g == abs(aqq):
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (aqq - app) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                cs = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * cs
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = cs * ap - sn * aq
                a[:, q] = sn * ap + cs * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = cs * rp - sn * rq
                a[q, :] = sn * rp + cs * rq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = cs * vp - sn * vq
                v[:, q] = sn * vp + cs * vq
        sweeps += 1
        off = _off_norm(a)

    values = np.diag(a).copy()
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = v[:, order].T.copy()
    for row in vectors:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return EigenPairs(values, vectors)


def n_components_for_variance(eigenvalues, threshold: float) -> int:
    """Smallest N' whose leading eigenvalues cover ``threshold`` of the
    (clamped nonnegative) spectrum. Evaluated in exact rational arithmetic
    so the boundary case, e.g. 9.5 / 10 against 0.95, is decided exactly.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"variance threshold must be in (0, 1], got {threshold}")
    lam = [Fraction(max(float(x), 0.0)) for x in eigenvalues]
    total = sum(lam, Fraction(0))
    if total <= 0:
        raise DegenerateError("spectrum has no strictly positive eigenvalue")
    goal = Fraction(threshold) * total
    acc = Fraction(0)
    for j, x in enumerate(lam, start=1):
        acc += x
        if acc >= goal:
            return j
    return len(lam)  # pragma: no cover - acc reaches total at the last positive value


def select_eigenvectors(pairs: EigenPairs, variance_threshold: float) -> EigenPairs:
    return pairs.truncate(n_components_for_variance(pairs.values, variance_threshold))


def project(v, basis: EigenPairs) -> np.ndarray:
    """Weights w_j = gamma_j . v of a centered vector in the given basis."""
    x = np.asarray(v, dtype=float)
    if x.ndim != 1 or x.shape[0] != basis.dim:
        raise DataError(
            f"vector has dimension {x.shape} but the basis expects {basis.dim}"
        )
    return basis.vectors @ x


def reconstruct(weights, basis: EigenPairs) -> np.ndarray:
    """Inverse of ``project`` on the spanned subspace: sum_j w_j gamma_j."""
    w = np.asarray(weights, dtype=float)
    return basis.vectors[: w.shape[0]].T @ w
