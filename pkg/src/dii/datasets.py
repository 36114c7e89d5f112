"""Dataset ingestion, synthetic ground-truth-recovery benchmarks, and weight
evaluation metrics.

Random data uses numpy's PCG64 generator seeded through ``SeedSequence`` so
benchmarks reproduce bit-identically across platforms; independent streams are
derived by spawning the seed sequence.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import warnings
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "DatasetBundle",
    "load_csv",
    "save_bundle",
    "load_bundle",
    "gen_gaussian_benchmark",
    "gen_monomial_benchmark",
    "monomial_names",
    "cosine_similarity",
    "standardize",
    "GAUSSIAN_GT_WEIGHTS",
    "MONOMIAL_GT_WEIGHTS",
]

# Default ground-truth scalings of the two synthetic benchmarks: per-feature
# weights for the 10 i.i.d. Gaussians, and name -> weight for the supported
# monomials in the degree-<=3 monomial space.
GAUSSIAN_GT_WEIGHTS = (5.0, 2.0, 1.0, 1.0, 0.5, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4)
MONOMIAL_GT_WEIGHTS = {
    "X5": 10.0,
    "X1*X5*X6": 7.0,
    "X3": 6.0,
    "X2^2": 5.0,
    "X6": 5.0,
    "X10": 4.0,
    "X1*X2": 3.0,
    "X8*X10^2": 2.0,
    "X8": 1.0,
    "X5*X8": 1.0,
}


@dataclass
class DatasetBundle:
    """An input feature space, its ground-truth space, and (for known-truth
    benchmarks) the generating weights over the input features."""

    features: np.ndarray
    feature_names: list[str]
    ground_truth: np.ndarray | None = None
    gt_names: list[str] | None = None
    gt_weights: np.ndarray | None = None
    seed: int | None = None

    def __post_init__(self):
        if len(self.feature_names) != self.features.shape[1]:
            raise ValueError("feature name count does not match column count")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValueError("feature names must be unique")
        if self.ground_truth is not None and (
            self.ground_truth.shape[0] != self.features.shape[0]
        ):
            raise ValueError("feature and ground-truth row counts differ")


class CsvFormatError(ValueError):
    """Malformed numeric CSV: ragged rows, bad cells, or duplicate headers."""


def _parse_cell(text: str, row: int, col: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise CsvFormatError(
            f"non-numeric cell {text!r} at row {row}, column {col!r}"
        ) from None
    if not math.isfinite(value):
        raise CsvFormatError(f"non-finite value {text!r} at row {row}, column {col!r}")
    return value


def load_csv(path, gt_cols=(), ignore_cols=()) -> DatasetBundle:
    """Parse a rectangular numeric CSV with header into a dataset bundle.

    Columns named in ``gt_cols`` form the ground-truth space, ``ignore_cols``
    are dropped, and everything else is an input feature.  NaN/Inf cells and
    ragged rows are rejected with their (row, column) location.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        dupes = [name for name, cnt in Counter(header).items() if cnt > 1]
        if dupes:
            raise CsvFormatError(f"{path}: duplicate header column(s) {dupes}")
        for name in (*gt_cols, *ignore_cols):
            if name not in header:
                raise CsvFormatError(f"{path}: no column named {name!r}")

        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise CsvFormatError(
                    f"{path}: ragged row at line {lineno} "
                    f"({len(row)} cells, expected {len(header)})"
                )
            rows.append(
                [_parse_cell(cell, lineno, header[j]) for j, cell in enumerate(row)]
            )
    if len(rows) < 2:
        raise CsvFormatError(f"{path}: need at least 2 data rows")

    table = np.array(rows, dtype=np.float64)
    gt_cols = list(gt_cols)
    feat_names = [h for h in header if h not in gt_cols and h not in ignore_cols]
    feat_idx = [header.index(h) for h in feat_names]
    gt_idx = [header.index(h) for h in gt_cols]
    return DatasetBundle(
        features=table[:, feat_idx],
        feature_names=feat_names,
        ground_truth=table[:, gt_idx] if gt_idx else None,
        gt_names=gt_cols or None,
    )


def save_bundle(bundle: DatasetBundle, csv_path) -> Path:
    """Write a bundle as a CSV plus a JSON metadata sidecar (``.meta.json``)
    recording column roles, generating weights and seed."""
    csv_path = Path(csv_path)
    gt_names = bundle.gt_names or []
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*bundle.feature_names, *gt_names])
        gt = bundle.ground_truth
        for i in range(bundle.features.shape[0]):
            row = [repr(float(v)) for v in bundle.features[i]]
            if gt is not None:
                row += [repr(float(v)) for v in gt[i]]
            writer.writerow(row)
    meta = {
        "feature_names": bundle.feature_names,
        "gt_names": gt_names,
        "gt_weights": None if bundle.gt_weights is None else bundle.gt_weights.tolist(),
        "seed": bundle.seed,
    }
    meta_path = csv_path.with_suffix(csv_path.suffix + ".meta.json")
    meta_path.write_text(json.dumps(meta, indent=2) + "\n")
    return meta_path


def load_bundle(csv_path) -> DatasetBundle:
    """Load a CSV written by :func:`save_bundle`, using its metadata sidecar to
    recover column roles and generating weights."""
    csv_path = Path(csv_path)
    meta_path = csv_path.with_suffix(csv_path.suffix + ".meta.json")
    meta = json.loads(meta_path.read_text())
    bundle = load_csv(csv_path, gt_cols=meta.get("gt_names") or ())
    if meta.get("gt_weights") is not None:
        bundle.gt_weights = np.array(meta["gt_weights"], dtype=np.float64)
    bundle.seed = meta.get("seed")
    return bundle


def gen_gaussian_benchmark(n: int = 1500, d: int = 10, gt_weights=None,
                           seed: int = 0) -> DatasetBundle:
    """i.i.d. standard-normal features whose ground-truth space is the same
    features scaled by known weights."""
    if gt_weights is None:
        if d > len(GAUSSIAN_GT_WEIGHTS):
            raise ValueError(f"no default gt_weights for d={d}; pass them explicitly")
        gt_weights = GAUSSIAN_GT_WEIGHTS[:d]
    gt = np.asarray(gt_weights, dtype=np.float64)
    if gt.shape != (d,):
        raise ValueError(f"gt_weights must have length {d}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    x = rng.standard_normal((n, d))
    names = [f"X{i + 1}" for i in range(d)]
    return DatasetBundle(
        features=x,
        feature_names=names,
        ground_truth=x * gt,
        gt_names=[f"gt_{name}" for name in names],
        gt_weights=gt,
        seed=seed,
    )


def _exponent_vectors(base_d: int, order: int):
    """Exponent multisets of all monomials of degree 1..order, graded by degree
    and lexicographic in the index combination within each degree."""
    for degree in range(1, order + 1):
        yield from itertools.combinations_with_replacement(range(base_d), degree)


def _monomial_name(combo) -> str:
    parts = []
    for idx, power in sorted(Counter(combo).items()):
        parts.append(f"X{idx + 1}" + (f"^{power}" if power > 1 else ""))
    return "*".join(parts)


def monomial_names(base_d: int = 10, order: int = 3) -> list[str]:
    return [_monomial_name(combo) for combo in _exponent_vectors(base_d, order)]


def gen_monomial_benchmark(n: int = 1500, base_d: int = 10, order: int = 3,
                           gt_support=None, gt_weights=None,
                           seed: int = 0) -> DatasetBundle:
    """All monomials of degree 1..order in i.i.d. Gaussian base variables; the
    ground truth is built from a small supported subset scaled by known
    weights.

    For the defaults (10 base variables, order 3) the feature space has
    10 + 55 + 220 = 285 monomials and the default support/weights follow the
    benchmark scalings in :data:`MONOMIAL_GT_WEIGHTS`.
    """
    combos = list(_exponent_vectors(base_d, order))
    names = [_monomial_name(c) for c in combos]
    n_feat = len(names)

    if gt_support is None:
        if gt_weights is not None:
            raise ValueError("gt_weights requires an explicit gt_support")
        missing = [k for k in MONOMIAL_GT_WEIGHTS if k not in names]
        if missing:
            raise ValueError(f"default support needs monomials {missing}; "
                             "pass gt_support explicitly for this base_d/order")
        gt_support = [names.index(k) for k in MONOMIAL_GT_WEIGHTS]
        gt_weights = list(MONOMIAL_GT_WEIGHTS.values())
    gt_support = list(gt_support)
    if any(i < 0 or i >= n_feat for i in gt_support):
        raise ValueError("gt_support index out of range")
    if gt_weights is None or len(gt_weights) != len(gt_support):
        raise ValueError("gt_weights must match gt_support length")

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    base = rng.standard_normal((n, base_d))
    features = np.empty((n, n_feat))
    for j, combo in enumerate(combos):
        features[:, j] = np.prod(base[:, combo], axis=1)

    full_gt = np.zeros(n_feat)
    full_gt[gt_support] = gt_weights
    return DatasetBundle(
        features=features,
        feature_names=names,
        ground_truth=features[:, gt_support] * np.asarray(gt_weights, dtype=np.float64),
        gt_names=[f"gt_{names[i]}" for i in gt_support],
        gt_weights=full_gt,
        seed=seed,
    )


def cosine_similarity(a, b) -> float:
    """Scale-free overlap a.b / (|a||b|); in [0, 1] for nonnegative weight
    vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("inputs must be 1-D vectors of equal length")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity undefined for a zero vector")
    return float(a @ b / (na * nb))


def standardize(x):
    """Zero-mean unit-std copy of each feature; returns (standardized, mean,
    std).  Constant features are left at 0 with a warning."""
    x = np.asarray(x, dtype=np.float64)
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    constant = std == 0.0
    if constant.any():
        warnings.warn(
            f"{int(constant.sum())} constant feature(s) left at zero",
            RuntimeWarning,
            stacklevel=2,
        )
    out = np.zeros_like(x)
    np.divide(x - mean, std, out=out, where=~constant)
    return out, mean, std
