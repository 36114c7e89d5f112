"""Numerical kernels: weighted distances, neighbor ranks, softmax coefficients,
the differentiable information imbalance (DII), its classic hard-rank version,
the analytic gradient with respect to the feature weights, and the adaptive
softmax scale.

All functions are pure and operate on plain float64 numpy arrays.  Matrices may
be row-subsampled: an optional ``row_ids`` array selects which points act as
anchors (rows), while columns always span the full data set.
"""

from __future__ import annotations

import warnings

import numpy as np

__all__ = [
    "DegenerateMetricError",
    "DegenerateNeighborhoodsError",
    "weighted_distances",
    "rank_matrix",
    "classic_imbalance",
    "softmax_coefficients",
    "adaptive_lambda",
    "dii_value",
    "dii_gradient",
]


class DegenerateMetricError(ValueError):
    """Raised when the weight vector defines no metric (all weights zero)."""


class DegenerateNeighborhoodsError(ValueError):
    """Raised when every first/second-neighbor gap is zero."""


# Below this rows*cols*features element count, pairwise distances are computed
# by explicit broadcasting (more accurate for near-coincident points); above it,
# the Gram-matrix identity is used so memory stays O(rows*cols).
_EXACT_PATH_ELEMS = 8_000_000


def _as_data(x) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 1:
        raise ValueError(f"data must be an (N>=2, D>=1) matrix, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("data contains non-finite entries")
    return x


def _as_weights(w, n_features: int) -> np.ndarray:
    w = np.ascontiguousarray(w, dtype=np.float64)
    if w.shape != (n_features,):
        raise ValueError(f"weight vector must have shape ({n_features},), got {w.shape}")
    if not np.isfinite(w).all():
        raise ValueError("weight vector contains non-finite entries")
    if (w < 0).any():
        raise ValueError("weights must be nonnegative")
    if not w.any():
        raise DegenerateMetricError("degenerate metric: all feature weights are zero")
    return w


def _as_row_ids(row_ids, n_points: int) -> np.ndarray:
    if row_ids is None:
        return np.arange(n_points)
    row_ids = np.asarray(row_ids, dtype=np.intp)
    if row_ids.ndim != 1 or row_ids.size == 0:
        raise ValueError("row_ids must be a nonempty 1-D index array")
    if (row_ids < 0).any() or (row_ids >= n_points).any():
        raise ValueError("row_ids out of range")
    if np.unique(row_ids).size != row_ids.size:
        raise ValueError("row_ids must be distinct")
    return row_ids


def weighted_distances(x, w, row_ids=None) -> np.ndarray:
    """Pairwise Euclidean distances between feature-scaled points.

    Returns an (n_rows, N) matrix ``d`` with
    ``d[i, j] = || w * (x[row_ids[i]] - x[j]) ||`` and exact zeros on the
    self entries ``d[i, row_ids[i]]``.
    """
    x = _as_data(x)
    n, n_feat = x.shape
    w = _as_weights(w, n_feat)
    row_ids = _as_row_ids(row_ids, n)

    scaled = x * w
    n_rows = row_ids.size
    if n_rows * n * n_feat <= _EXACT_PATH_ELEMS:
        diff = scaled[row_ids, None, :] - scaled[None, :, :]
        d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    else:
        sq = np.einsum("ij,ij->i", scaled, scaled)
        d2 = sq[row_ids, None] + sq[None, :] - 2.0 * scaled[row_ids] @ scaled.T
        np.maximum(d2, 0.0, out=d2)
        d = np.sqrt(d2)
    d[np.arange(n_rows), row_ids] = 0.0
    return d


def rank_matrix(d, row_ids=None) -> np.ndarray:
    """Neighbor ranks per row, excluding self.

    For each row the non-self columns receive the 1-based positions in
    ascending distance order; equal distances are ordered by ascending point
    index.  The self column is stored as 0.
    """
    d = np.asarray(d, dtype=np.float64)
    n_rows, n = d.shape
    row_ids = _as_row_ids(row_ids, n)
    if row_ids.size != n_rows:
        raise ValueError("row_ids length does not match number of rows")

    work = d.copy()
    rows = np.arange(n_rows)
    work[rows, row_ids] = -np.inf  # self sorts first, ahead of zero-distance ties
    order = np.argsort(work, axis=1, kind="stable")
    ranks = np.empty((n_rows, n), dtype=np.int64)
    np.put_along_axis(ranks, order, np.broadcast_to(np.arange(n), (n_rows, n)), axis=1)
    return ranks


def classic_imbalance(ranks_a, ranks_b, row_ids=None, distances_a=None) -> float:
    """Hard-rank information imbalance: mean ground-truth rank of each row's
    nearest neighbor, scaled by 2/N.

    With ``distances_a`` given, rows whose minimum distance is attained by
    several points average the ground-truth rank over all tied neighbors.
    """
    ranks_a = np.asarray(ranks_a)
    ranks_b = np.asarray(ranks_b)
    if ranks_a.shape != ranks_b.shape:
        raise ValueError("rank matrices must have matching shapes")
    n_rows, n = ranks_a.shape
    row_ids = _as_row_ids(row_ids, n)
    rows = np.arange(n_rows)

    if distances_a is None:
        nearest = np.argmax(ranks_a == 1, axis=1)
        total = float(ranks_b[rows, nearest].sum())
    else:
        d = np.asarray(distances_a, dtype=np.float64)
        if d.shape != ranks_a.shape:
            raise ValueError("distances_a shape mismatch")
        work = d.copy()
        work[rows, row_ids] = np.inf
        dmin = work.min(axis=1)
        tied = work == dmin[:, None]
        total = float((np.where(tied, ranks_b, 0).sum(axis=1) / tied.sum(axis=1)).sum())
    return 2.0 * total / (n_rows * n)


def softmax_coefficients(d, lam, row_ids=None) -> np.ndarray:
    """Row-normalized exponential neighbor coefficients exp(-d/lam).

    Each row is shifted by its minimum non-self distance before
    exponentiation (exact, prevents underflow at small ``lam``); self entries
    are 0 and each row sums to 1.
    """
    if not lam > 0:
        raise ValueError(f"softmax scale must be positive, got {lam}")
    d = np.asarray(d, dtype=np.float64)
    n_rows, n = d.shape
    row_ids = _as_row_ids(row_ids, n)

    work = d.copy()
    work[np.arange(n_rows), row_ids] = np.inf
    shift = work.min(axis=1, keepdims=True)
    c = np.exp((shift - work) / lam)  # self column: exp(-inf) = 0
    c /= c.sum(axis=1, keepdims=True)
    return c


def adaptive_lambda(d, row_ids=None, floor_scale=1e-12) -> float:
    """Softmax scale from first/second-neighbor distance gaps.

    Per row, the gap is the difference between the second- and first-neighbor
    distances; the scale is the mean of the smallest and the average gap.
    Near-duplicate data is clamped to ``floor_scale`` times the mean pairwise
    distance (with a warning); fully degenerate neighborhoods raise.
    """
    d = np.asarray(d, dtype=np.float64)
    n_rows, n = d.shape
    if n < 3:
        raise ValueError("adaptive scale needs at least 2 non-self points per row")
    row_ids = _as_row_ids(row_ids, n)

    work = d.copy()
    work[np.arange(n_rows), row_ids] = np.inf
    two = np.partition(work, 1, axis=1)[:, :2]
    gaps = two[:, 1] - two[:, 0]
    if not (gaps > 0).any():
        raise DegenerateNeighborhoodsError(
            "degenerate neighborhoods: all first/second-neighbor gaps are zero"
        )
    lam = 0.5 * (gaps.min() + gaps.mean())
    floor = floor_scale * d.sum() / (n_rows * (n - 1))
    if lam < floor:
        warnings.warn(
            f"adaptive softmax scale {lam:.3e} below floor {floor:.3e}; clamping",
            RuntimeWarning,
            stacklevel=2,
        )
        lam = floor
    return float(lam)


def dii_value(c, ranks_b) -> float:
    """Differentiable information imbalance: softmax-weighted mean ground-truth
    rank, scaled by 2/N."""
    c = np.asarray(c, dtype=np.float64)
    ranks_b = np.asarray(ranks_b)
    if c.shape != ranks_b.shape:
        raise ValueError("coefficient and rank matrices must have matching shapes")
    n_rows, n = c.shape
    return 2.0 * float(np.einsum("ij,ij->", c, ranks_b)) / (n_rows * n)


def dii_gradient(x, w, c, ranks_b, lam, distances, row_ids=None) -> np.ndarray:
    """Analytic gradient of the DII with respect to the feature weights.

    ``c`` and ``distances`` must have been computed from ``(x, w)`` at scale
    ``lam``.  Pairs at zero weighted distance contribute nothing (their true
    directional derivative is bounded; this matches the subgradient
    convention).  Zero-weight features get an exactly zero component.
    """
    if not lam > 0:
        raise ValueError(f"softmax scale must be positive, got {lam}")
    x = _as_data(x)
    n, n_feat = x.shape
    w = _as_weights(w, n_feat)
    row_ids = _as_row_ids(row_ids, n)
    c = np.asarray(c, dtype=np.float64)
    ranks_b = np.asarray(ranks_b, dtype=np.float64)
    d = np.asarray(distances, dtype=np.float64)
    n_rows = row_ids.size
    if c.shape != (n_rows, n) or ranks_b.shape != (n_rows, n) or d.shape != (n_rows, n):
        raise ValueError("coefficient, rank and distance matrices must be (n_rows, N)")

    # d/dw_a DII = pref_a * sum_ij (s_i c_ij - c_ij r_ij) (x_i^a - x_j^a)^2 / d_ij
    t = c * ranks_b
    s = t.sum(axis=1)
    a = s[:, None] * c - t
    a = np.where(d > 0.0, a, 0.0) / np.where(d > 0.0, d, 1.0)

    xr = x[row_ids]
    row_tot = a.sum(axis=1)
    col_tot = a.sum(axis=0)
    quad = (
        row_tot @ (xr * xr)
        - 2.0 * np.einsum("ia,ia->a", xr, a @ x)
        + col_tot @ (x * x)
    )
    return (2.0 * w / (lam * n_rows * n)) * quad
