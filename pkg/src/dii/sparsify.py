"""Sparse-subset search on top of the DII optimizer: L1-strength grid search,
backward greedy elimination, exhaustive small-D subset search, row
subsampling, and block cross-validation.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .optim import (
    OptimizerConfig,
    OverRegularizedError,
    evaluate_dii_fixed,
    ground_truth_ranks,
    initial_weights,
    optimize_dii,
)

__all__ = [
    "SparsityEntry",
    "SparsityPath",
    "BlockSplit",
    "CrossValResult",
    "DEFAULT_P_GRID",
    "lasso_search",
    "greedy_backward",
    "exhaustive_search",
    "subsample_rows",
    "block_cross_validate",
]

# 24 log-spaced L1 strengths spanning the effective sparsification range with
# margin on both sides.
DEFAULT_P_GRID = tuple(np.logspace(-6, -1, 24))


@dataclass
class SparsityEntry:
    """One optimized solution along a sparsity path.

    ``control`` is the L1 strength for lasso entries and the target
    cardinality for greedy/exhaustive entries.  ``flagged`` marks
    over-regularized runs (all-zero weights, undefined DII).
    """

    control: float
    weights: np.ndarray
    dii: float
    n_nonzero: int
    flagged: bool = False


@dataclass
class SparsityPath:
    entries: list[SparsityEntry] = field(default_factory=list)

    def best_per_cardinality(self) -> dict[int, SparsityEntry]:
        """Minimum-DII entry for each observed nonzero count, skipping flagged
        entries."""
        best: dict[int, SparsityEntry] = {}
        for e in self.entries:
            if e.flagged:
                continue
            cur = best.get(e.n_nonzero)
            if cur is None or e.dii < cur.dii:
                best[e.n_nonzero] = e
        return best

    def curve(self) -> list[tuple[int, float]]:
        """(n_nonzero, best DII) pairs sorted by cardinality."""
        best = self.best_per_cardinality()
        return [(k, best[k].dii) for k in sorted(best)]

    def to_csv(self, feature_names=None) -> str:
        n_feat = len(self.entries[0].weights) if self.entries else 0
        if feature_names is None:
            feature_names = [f"w{i + 1}" for i in range(n_feat)]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["control", "n_nonzero", "dii", *feature_names])
        for e in self.entries:
            dii = "" if e.flagged else repr(e.dii)
            writer.writerow([repr(float(e.control)), e.n_nonzero, dii,
                             *(repr(float(v)) for v in e.weights)])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            [
                {
                    "control": float(e.control),
                    "n_nonzero": e.n_nonzero,
                    "dii": None if e.flagged else e.dii,
                    "flagged": e.flagged,
                    "weights": e.weights.tolist(),
                }
                for e in self.entries
            ]
        )


def _map_jobs(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def lasso_search(x, ranks_b, cfg: OptimizerConfig, p_grid=None, row_ids=None,
                 jobs: int = 1) -> SparsityPath:
    """One optimization per L1 strength.  Over-regularized strengths are kept
    as flagged all-zero entries and excluded from per-cardinality bests.

    Entries hold the final-epoch weights: under GD clipping the sparsity
    pattern is the end state of the shrinkage dynamics, while the min-DII
    epoch of a regularized trace is typically an early, still-dense iterate
    whose DII undercuts every sparse solution the penalty is meant to find.
    """
    if p_grid is None:
        p_grid = DEFAULT_P_GRID
    p_grid = [float(p) for p in p_grid]
    if not p_grid:
        raise ValueError("p_grid must be nonempty")
    if any(p < 0 for p in p_grid):
        raise ValueError("L1 strengths must be nonnegative")
    n_feat = np.asarray(x).shape[1]

    def run(p: float) -> SparsityEntry:
        try:
            trace = optimize_dii(x, ranks_b, replace(cfg, l1_penalty=p), row_ids)
        except OverRegularizedError:
            return SparsityEntry(p, np.zeros(n_feat), math.nan, 0, flagged=True)
        w = trace.final_weights
        return SparsityEntry(p, w, trace.final_dii, int(np.count_nonzero(w)))

    return SparsityPath(_map_jobs(run, p_grid, jobs))


def greedy_backward(x, ranks_b, cfg: OptimizerConfig, row_ids=None) -> SparsityPath:
    """Backward elimination: optimize all features, zero the smallest
    optimized weight, reoptimize from the reduced vector, down to one feature.

    Each reduced run restarts from the previous optimized weights with the
    eliminated component zeroed; ties on the smallest weight eliminate the
    lowest feature index.
    """
    x = np.asarray(x, dtype=np.float64)
    n_feat = x.shape[1]
    w_start = (cfg.initial_weights if cfg.initial_weights is not None
               else initial_weights(x)).copy()

    entries = []
    for cardinality in range(n_feat, 0, -1):
        trace = optimize_dii(x, ranks_b, replace(cfg, initial_weights=w_start), row_ids)
        w = trace.best_weights.copy()
        entries.append(
            SparsityEntry(cardinality, w, trace.best_dii, int(np.count_nonzero(w)))
        )
        active = np.flatnonzero(w_start > 0)
        drop = active[np.argmin(w[active])]  # argmin takes the lowest index on ties
        w_start = w.copy()
        w_start[drop] = 0.0
    return SparsityPath(entries)


def exhaustive_search(x, ranks_b, cfg: OptimizerConfig, max_d: int = 10,
                      row_ids=None, jobs: int = 1) -> SparsityPath:
    """Optimize every nonempty feature subset (excluded weights fixed at 0).

    Refuses when the number of features exceeds ``max_d``, since the cost is
    2^D - 1 optimizations.
    """
    x = np.asarray(x, dtype=np.float64)
    n_feat = x.shape[1]
    if n_feat > max_d:
        raise ValueError(
            f"exhaustive search over {n_feat} features exceeds the bound of "
            f"{max_d} (2^{n_feat}-1 subsets); raise max_d explicitly to force it"
        )
    base_w0 = (cfg.initial_weights if cfg.initial_weights is not None
               else initial_weights(x))
    subsets = [
        s for k in range(1, n_feat + 1)
        for s in itertools.combinations(range(n_feat), k)
    ]

    def run(subset) -> SparsityEntry:
        w0 = np.zeros(n_feat)
        w0[list(subset)] = base_w0[list(subset)]
        try:
            trace = optimize_dii(x, ranks_b, replace(cfg, initial_weights=w0), row_ids)
        except OverRegularizedError:
            return SparsityEntry(len(subset), np.zeros(n_feat), math.nan, 0, flagged=True)
        w = trace.best_weights
        return SparsityEntry(len(subset), w, trace.best_dii, int(np.count_nonzero(w)))

    return SparsityPath(_map_jobs(run, subsets, jobs))


def subsample_rows(n_points: int, mode: str = "all", seed: int = 0) -> np.ndarray:
    """Anchor-row indices chosen once before training.

    ``mode`` is ``"all"``, ``"frac:<f>"`` (ceil(f*N) rows) or ``"fixed:<m>"``
    (min(m, N) rows).  Indices are uniform random without replacement,
    returned sorted.
    """
    if mode == "all":
        return np.arange(n_points)
    if mode.startswith("frac:"):
        f = float(mode[5:])
        m = math.ceil(f * n_points)
    elif mode.startswith("fixed:"):
        m = min(int(mode[6:]), n_points)
    else:
        raise ValueError(f"unknown row-subsampling mode {mode!r}")
    if m < 2:
        raise ValueError(f"row subsample of {m} rows is too small (need >= 2)")
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n_points, size=m, replace=False))


@dataclass
class BlockSplit:
    """Contiguous disjoint blocks covering the index range, decorrelated by
    keeping every ``stride``-th point within a block."""

    n_blocks: int
    stride: int = 1

    def blocks(self, n_points: int) -> list[np.ndarray]:
        if self.n_blocks < 1:
            raise ValueError("n_blocks must be >= 1")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        return np.array_split(np.arange(n_points), self.n_blocks)


@dataclass
class BlockResult:
    block: int
    weights: np.ndarray
    train_dii: float
    validation_diis: list[float]


@dataclass
class CrossValResult:
    per_block: list[BlockResult]

    def train_diis(self) -> np.ndarray:
        return np.array([b.train_dii for b in self.per_block])

    def validation_diis(self) -> np.ndarray:
        return np.concatenate([b.validation_diis for b in self.per_block])

    def summary(self) -> dict:
        train = self.train_diis()
        val = self.validation_diis()
        return {
            "train_mean": float(train.mean()),
            "train_std": float(train.std()),
            "validation_mean": float(val.mean()),
            "validation_std": float(val.std()),
            "n_blocks": len(self.per_block),
            "n_validation_sets": int(val.size),
        }


_MIN_BLOCK_POINTS = 3  # adaptive softmax scale needs two non-self neighbors


def block_cross_validate(x_a, x_b, split: BlockSplit, cfg: OptimizerConfig) -> CrossValResult:
    """Optimize on each strided block and evaluate the fixed weights on strided
    validation sets built from every other block at every stride offset."""
    x_a = np.asarray(x_a, dtype=np.float64)
    x_b = np.asarray(x_b, dtype=np.float64)
    if x_a.shape[0] != x_b.shape[0]:
        raise ValueError("input and ground-truth spaces must have matching row counts")
    if split.n_blocks < 2:
        raise ValueError("block cross-validation needs >= 2 blocks (validation set empty)")
    blocks = split.blocks(x_a.shape[0])

    results = []
    for b, block in enumerate(blocks):
        train_idx = block[:: split.stride]
        if train_idx.size < _MIN_BLOCK_POINTS:
            raise ValueError(f"block {b} too small after striding ({train_idx.size} points)")
        ranks_train = ground_truth_ranks(x_b[train_idx])
        trace = optimize_dii(x_a[train_idx], ranks_train, cfg)
        w = trace.best_weights

        val_diis = []
        for v, other in enumerate(blocks):
            if v == b:
                continue
            for offset in range(split.stride):
                val_idx = other[offset:: split.stride]
                if val_idx.size < _MIN_BLOCK_POINTS:
                    raise ValueError(
                        f"block {v} too small after striding ({val_idx.size} points)"
                    )
                ranks_val = ground_truth_ranks(x_b[val_idx])
                val_diis.append(evaluate_dii_fixed(x_a[val_idx], ranks_val, w))
        results.append(BlockResult(b, w, trace.best_dii, val_diis))
    return CrossValResult(results)
