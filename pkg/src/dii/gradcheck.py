"""Finite-difference validation of the analytic DII gradient."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    adaptive_lambda,
    dii_gradient,
    dii_value,
    softmax_coefficients,
    weighted_distances,
)
from .optim import ground_truth_ranks

__all__ = ["finite_difference_gradient", "GradientCheckResult", "gradient_check"]

DEFAULT_REL_STEP = 1e-6
DEFAULT_TOLERANCE = 1e-5


def _dii_at(x, w, lam, ranks_b, row_ids=None):
    d = weighted_distances(x, w, row_ids)
    c = softmax_coefficients(d, lam, row_ids)
    return dii_value(c, ranks_b)


def finite_difference_gradient(x, w, ranks_b, lam, row_ids=None,
                               rel_step: float = DEFAULT_REL_STEP) -> np.ndarray:
    """Central-difference gradient of the DII at fixed softmax scale, with a
    per-component step of ``rel_step * |w_alpha|``.  Zero-weight components
    have a zero derivative and are returned as exact zeros."""
    w = np.asarray(w, dtype=np.float64)
    grad = np.zeros_like(w)
    for alpha in np.flatnonzero(w):
        h = rel_step * abs(w[alpha])
        wp = w.copy()
        wp[alpha] += h
        wm = w.copy()
        wm[alpha] -= h
        grad[alpha] = (
            _dii_at(x, wp, lam, ranks_b, row_ids)
            - _dii_at(x, wm, lam, ranks_b, row_ids)
        ) / (2.0 * h)
    return grad


@dataclass
class GradientCheckResult:
    max_relative_error: float
    tolerance: float
    n_instances: int

    @property
    def passed(self) -> bool:
        return self.max_relative_error < self.tolerance


def gradient_check(n_instances: int = 20, n_points: int = 60, n_features: int = 8,
                   seed: int = 0, tolerance: float = DEFAULT_TOLERANCE,
                   gradient_fn=dii_gradient) -> GradientCheckResult:
    """Compare the analytic gradient against central finite differences on
    random (data, weights) instances and report the worst componentwise
    relative error."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    worst = 0.0
    for _ in range(n_instances):
        x = rng.standard_normal((n_points, n_features))
        w = rng.uniform(0.3, 3.0, size=n_features)
        x_b = rng.standard_normal((n_points, max(1, n_features // 2)))
        ranks_b = ground_truth_ranks(x_b)

        d = weighted_distances(x, w)
        lam = adaptive_lambda(d)
        c = softmax_coefficients(d, lam)
        analytic = gradient_fn(x, w, c, ranks_b, lam, d)
        numeric = finite_difference_gradient(x, w, ranks_b, lam)
        scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-300)
        worst = max(worst, float(np.max(np.abs(analytic - numeric) / scale)))
    return GradientCheckResult(worst, tolerance, n_instances)
