"""Command-line front end.

Subcommands: ``optimize``, ``lasso``, ``greedy``, ``exhaustive``, ``eval``,
``crossval``, ``generate``, ``gradcheck``.  Every run that writes files emits
``manifest.json`` first, recording the fully resolved configuration, input
digests and per-phase timings.  Exit codes: 0 ok, 1 check failure, 2
usage/input error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import DegenerateMetricError, DegenerateNeighborhoodsError
from .datasets import (
    CsvFormatError,
    gen_gaussian_benchmark,
    gen_monomial_benchmark,
    load_bundle,
    load_csv,
    save_bundle,
    standardize,
)
from .gradcheck import gradient_check
from .optim import (
    OptimizerConfig,
    OverRegularizedError,
    evaluate_dii_fixed,
    ground_truth_ranks,
    optimize_dii,
)
from .sparsify import (
    DEFAULT_P_GRID,
    BlockSplit,
    block_cross_validate,
    exhaustive_search,
    greedy_backward,
    lasso_search,
    subsample_rows,
)

log = logging.getLogger("dii")

_SCHEDULE_NAMES = {"cosine": "cosine", "exp": "exponential", "both": "both",
                   "const": "constant"}

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


class UsageError(ValueError):
    """Bad flags or unreadable/malformed input (exit 2)."""


def _setup_logging() -> None:
    level = os.environ.get("DII_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _add_common_flags(p: argparse.ArgumentParser, with_data=True) -> None:
    if with_data:
        p.add_argument("--data", required=True, help="input CSV (header required)")
        p.add_argument("--gt-cols", default=None,
                       help="comma-separated ground-truth columns of --data, or "
                            "'self' to use the standardized input space itself")
        p.add_argument("--gt-data", default=None,
                       help="separate CSV whose columns form the ground-truth space")
    p.add_argument("--epochs", type=int, default=None, help="training epochs (default 80)")
    p.add_argument("--eta0", type=float, default=None,
                   help="initial learning rate (default: auto probe)")
    p.add_argument("--schedule", choices=sorted(_SCHEDULE_NAMES), default=None,
                   help="learning-rate schedule (default cosine)")
    p.add_argument("--l1", type=float, default=None, help="L1 penalty strength (default 0)")
    p.add_argument("--lambda", dest="lambda_", default=None, metavar="LAMBDA",
                   help="softmax scale: 'adaptive' (default) or a positive float")
    p.add_argument("--rows", default=None,
                   help="anchor-row subsampling: all | frac:<f> | fixed:<m> (default all)")
    p.add_argument("--seed", type=int, default=None, help="master RNG seed (default 0)")
    p.add_argument("--jobs", type=int, default=None,
                   help="max parallel optimizations for grid commands (default 1)")
    p.add_argument("--config", default=None, help="JSON file with flag defaults")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--plot", action="store_true", default=None,
                   help="also render figures next to the delimited outputs")


_DEFAULTS = {
    "epochs": 80,
    "eta0": None,
    "schedule": "cosine",
    "l1": 0.0,
    "lambda_": "adaptive",
    "rows": "all",
    "seed": 0,
    "jobs": 1,
    "plot": False,
}


def _resolve_config(args: argparse.Namespace) -> dict:
    """flags > config file > built-in defaults."""
    resolved = dict(_DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            file_cfg = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file {config_path}: {exc}") from exc
        unknown = set(file_cfg) - set(resolved)
        if unknown:
            raise UsageError(f"unknown config keys {sorted(unknown)}")
        resolved.update(file_cfg)
    for key in resolved:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    if resolved["epochs"] < 1:
        raise UsageError("--epochs must be >= 1")
    if resolved["jobs"] < 1:
        raise UsageError("--jobs must be >= 1")
    return resolved


def _parse_lambda(text) -> float | None:
    if text in (None, "adaptive"):
        return None
    try:
        value = float(text)
    except ValueError:
        raise UsageError(f"--lambda must be 'adaptive' or a float, got {text!r}") from None
    if not value > 0:
        raise UsageError("--lambda must be positive")
    return value


def _optimizer_config(resolved: dict) -> OptimizerConfig:
    return OptimizerConfig(
        n_epochs=resolved["epochs"],
        eta0=resolved["eta0"],
        schedule=_SCHEDULE_NAMES[resolved["schedule"]] if resolved["schedule"] in _SCHEDULE_NAMES
        else resolved["schedule"],
        l1_penalty=resolved["l1"],
        lambda0=_parse_lambda(resolved["lambda_"]),
        seed=resolved["seed"],
    )


def _load_spaces(args, resolved):
    """Input features, ground-truth matrix, feature names and input digests."""
    data_path = Path(args.data)
    if not data_path.is_file():
        raise UsageError(f"input file not found: {data_path}")
    digests = {str(data_path): _sha256(data_path)}

    gt_cols = args.gt_cols
    if gt_cols and args.gt_data:
        raise UsageError("--gt-cols and --gt-data are mutually exclusive")

    if gt_cols == "self":
        bundle = load_csv(data_path)
        gt, _, _ = standardize(bundle.features)
    elif gt_cols:
        bundle = load_csv(data_path, gt_cols=[c.strip() for c in gt_cols.split(",")])
        gt = bundle.ground_truth
    elif args.gt_data:
        gt_path = Path(args.gt_data)
        if not gt_path.is_file():
            raise UsageError(f"ground-truth file not found: {gt_path}")
        digests[str(gt_path)] = _sha256(gt_path)
        bundle = load_csv(data_path)
        gt_bundle = load_csv(gt_path)
        gt = gt_bundle.features
    else:
        meta_path = data_path.with_suffix(data_path.suffix + ".meta.json")
        if not meta_path.is_file():
            raise UsageError(
                "no ground truth: pass --gt-cols, --gt-data, or use a dataset "
                "with a .meta.json sidecar"
            )
        digests[str(meta_path)] = _sha256(meta_path)
        bundle = load_bundle(data_path)
        gt = bundle.ground_truth
        if gt is None:
            raise UsageError(f"{meta_path} declares no ground-truth columns")
    if gt.shape[0] != bundle.features.shape[0]:
        raise UsageError("feature and ground-truth row counts differ")

    row_ids = subsample_rows(
        bundle.features.shape[0],
        resolved["rows"],
        seed=int(np.random.SeedSequence(resolved["seed"]).spawn(1)[0].generate_state(1)[0]),
    )
    log.info(
        "loaded %d points, %d features, %d ground-truth columns, %d anchor rows",
        bundle.features.shape[0], bundle.features.shape[1], gt.shape[1], row_ids.size,
    )
    return bundle, gt, row_ids, digests


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Manifest:
    """Written to <out>/manifest.json before any result file; finalized with
    timings once the run completes."""

    def __init__(self, out_dir: Path, command: str, resolved: dict, digests: dict,
                 seed: int):
        self.path = out_dir / "manifest.json"
        self.data = {
            "command": command,
            "config": {k: resolved[k] for k in sorted(resolved)},
            "inputs": digests,
            "seed": seed,
            "version": __version__,
            "timings_s": {},
        }
        self._write()

    def _write(self) -> None:
        self.path.write_text(json.dumps(self.data, indent=2, default=str) + "\n")

    def time_phase(self, name: str):
        manifest = self

        class _Timer:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                manifest.data["timings_s"][name] = round(time.perf_counter() - self.t0, 6)
                manifest._write()
                return False

        return _Timer()


def _write_weights_csv(path: Path, names, best, final) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["feature", "best", "final"])
        for name, b, f in zip(names, best, final):
            writer.writerow([name, repr(float(b)), repr(float(f))])


def _write_curve_csv(path: Path, curve) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n_nonzero", "best_dii"])
        for n_nonzero, dii in curve:
            writer.writerow([n_nonzero, repr(float(dii))])


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_optimize(args) -> int:
    resolved = _resolve_config(args)
    cfg = _optimizer_config(resolved)
    bundle, gt, row_ids, digests = _load_spaces(args, resolved)
    out = _out_dir(args)
    manifest = Manifest(out, "optimize", resolved, digests, resolved["seed"])

    with manifest.time_phase("rank_matrix"):
        ranks_b = ground_truth_ranks(gt, row_ids)
    with manifest.time_phase("optimize"):
        trace = optimize_dii(bundle.features, ranks_b, cfg, row_ids)

    (out / "trace.jsonl").write_text(trace.to_jsonl())
    _write_weights_csv(out / "weights.csv", bundle.feature_names,
                       trace.best_weights, trace.final_weights)
    if resolved["plot"]:
        from .plotting import plot_trace

        plot_trace(range(len(trace.records)), trace.dii_series(), out / "trace.png")
    print(f"best DII {trace.best_dii:.6g} at epoch {trace.best_epoch} "
          f"({int(np.count_nonzero(trace.best_weights))} nonzero weights)")
    return EXIT_OK


def _run_path_command(args, name: str, runner) -> int:
    resolved = _resolve_config(args)
    cfg = _optimizer_config(resolved)
    bundle, gt, row_ids, digests = _load_spaces(args, resolved)
    out = _out_dir(args)
    manifest = Manifest(out, name, resolved, digests, resolved["seed"])

    with manifest.time_phase("rank_matrix"):
        ranks_b = ground_truth_ranks(gt, row_ids)
    with manifest.time_phase(name):
        path = runner(bundle.features, ranks_b, cfg, row_ids, resolved)

    (out / "path.csv").write_text(path.to_csv(bundle.feature_names))
    curve = path.curve()
    _write_curve_csv(out / "curve.csv", curve)
    if resolved["plot"]:
        from .plotting import plot_dii_curve

        plot_dii_curve([c[0] for c in curve], [c[1] for c in curve], out / "path.png")
    for n_nonzero, dii in curve:
        print(f"{n_nonzero:4d} nonzero: best DII {dii:.6g}")
    return EXIT_OK


def cmd_lasso(args) -> int:
    p_grid = None
    if args.l1_grid:
        try:
            p_grid = [float(p) for p in args.l1_grid.split(",")]
        except ValueError:
            raise UsageError(f"bad --l1-grid {args.l1_grid!r}") from None

    def run(x, ranks_b, cfg, row_ids, resolved):
        return lasso_search(x, ranks_b, cfg, p_grid=p_grid, row_ids=row_ids,
                            jobs=resolved["jobs"])

    return _run_path_command(args, "lasso", run)


def cmd_greedy(args) -> int:
    def run(x, ranks_b, cfg, row_ids, resolved):
        return greedy_backward(x, ranks_b, cfg, row_ids=row_ids)

    return _run_path_command(args, "greedy", run)


def cmd_exhaustive(args) -> int:
    def run(x, ranks_b, cfg, row_ids, resolved):
        try:
            return exhaustive_search(x, ranks_b, cfg, max_d=args.max_d,
                                     row_ids=row_ids, jobs=resolved["jobs"])
        except ValueError as exc:
            raise UsageError(str(exc)) from exc

    return _run_path_command(args, "exhaustive", run)


def cmd_eval(args) -> int:
    resolved = _resolve_config(args)
    bundle, gt, row_ids, digests = _load_spaces(args, resolved)

    weights_path = Path(args.weights)
    if not weights_path.is_file():
        raise UsageError(f"weights file not found: {weights_path}")
    digests[str(weights_path)] = _sha256(weights_path)
    by_name = {}
    with weights_path.open(newline="") as fh:
        for row in csv.DictReader(fh):
            by_name[row["feature"]] = float(row["best"])
    missing = [n for n in bundle.feature_names if n not in by_name]
    if missing:
        raise UsageError(f"weights file lacks feature(s) {missing[:5]}")
    w = np.array([by_name[n] for n in bundle.feature_names])

    out = _out_dir(args)
    manifest = Manifest(out, "eval", resolved, digests, resolved["seed"])
    with manifest.time_phase("eval"):
        ranks_b = ground_truth_ranks(gt, row_ids)
        dii = evaluate_dii_fixed(bundle.features, ranks_b, w,
                                 lambda0=_parse_lambda(resolved["lambda_"]),
                                 row_ids=row_ids)
    (out / "eval.json").write_text(json.dumps({"dii": dii}) + "\n")
    print(f"DII {dii:.6g}")
    return EXIT_OK


def cmd_crossval(args) -> int:
    resolved = _resolve_config(args)
    cfg = _optimizer_config(resolved)
    bundle, gt, _row_ids, digests = _load_spaces(args, resolved)
    out = _out_dir(args)
    manifest = Manifest(out, "crossval", resolved, digests, resolved["seed"])

    split = BlockSplit(n_blocks=args.blocks, stride=args.stride)
    with manifest.time_phase("crossval"):
        try:
            result = block_cross_validate(bundle.features, gt, split, cfg)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc

    report = result.summary()
    report["blocks"] = [
        {
            "block": b.block,
            "train_dii": b.train_dii,
            "validation_diis": b.validation_diis,
            "weights": b.weights.tolist(),
        }
        for b in result.per_block
    ]
    (out / "crossval.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"train DII {report['train_mean']:.6g} +/- {report['train_std']:.2g}, "
          f"validation DII {report['validation_mean']:.6g} +/- {report['validation_std']:.2g}")
    return EXIT_OK


def cmd_generate(args) -> int:
    resolved = _resolve_config(args)
    out = _out_dir(args)
    manifest = Manifest(out, "generate", resolved, {}, resolved["seed"])
    with manifest.time_phase("generate"):
        if args.benchmark == "gaussian":
            bundle = gen_gaussian_benchmark(n=args.n, seed=resolved["seed"])
        else:
            bundle = gen_monomial_benchmark(n=args.n, seed=resolved["seed"])
        save_bundle(bundle, out / "dataset.csv")
    print(f"wrote {out / 'dataset.csv'} "
          f"({bundle.features.shape[0]} points, {bundle.features.shape[1]} features)")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    if args.points > 200 or args.features > 20:
        raise UsageError("gradcheck instances are limited to N <= 200, D <= 20")
    result = gradient_check(
        n_instances=args.trials, n_points=args.points, n_features=args.features,
        seed=args.seed if args.seed is not None else 0, tolerance=args.tolerance,
    )
    status = "PASS" if result.passed else "FAIL"
    print(f"{status}: max relative error {result.max_relative_error:.3e} "
          f"over {result.n_instances} instances (tolerance {result.tolerance:g})")
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dii",
        description="Feature selection by differentiable information imbalance",
    )
    parser.add_argument("--version", action="version", version=f"dii {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="learn feature weights by gradient descent")
    _add_common_flags(p)
    p.set_defaults(fn=cmd_optimize)

    p = sub.add_parser("lasso", help="screen L1 strengths for sparse solutions")
    _add_common_flags(p)
    p.add_argument("--l1-grid", default=None,
                   help="comma-separated L1 strengths (default: 24-point log grid)")
    p.set_defaults(fn=cmd_lasso)

    p = sub.add_parser("greedy", help="backward greedy feature elimination")
    _add_common_flags(p)
    p.set_defaults(fn=cmd_greedy)

    p = sub.add_parser("exhaustive", help="optimize every feature subset (small D)")
    _add_common_flags(p)
    p.add_argument("--max-d", type=int, default=10,
                   help="refuse if the data has more features than this (default 10)")
    p.set_defaults(fn=cmd_exhaustive)

    p = sub.add_parser("eval", help="evaluate the DII of fixed weights")
    _add_common_flags(p)
    p.add_argument("--weights", required=True, help="weights.csv from a prior run")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("crossval", help="block cross-validation of learned weights")
    _add_common_flags(p)
    p.add_argument("--blocks", type=int, default=4, help="number of contiguous blocks")
    p.add_argument("--stride", type=int, default=1, help="keep every k-th point per block")
    p.set_defaults(fn=cmd_crossval)

    p = sub.add_parser("generate", help="write a synthetic benchmark dataset")
    _add_common_flags(p, with_data=False)
    p.add_argument("--benchmark", choices=("gaussian", "monomial"), required=True)
    p.add_argument("--n", type=int, default=1500, help="number of points")
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("gradcheck", help="validate the analytic gradient numerically")
    p.add_argument("--points", type=int, default=60)
    p.add_argument("--features", type=int, default=8)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tolerance", type=float, default=1e-5)
    p.set_defaults(fn=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (UsageError, CsvFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OverRegularizedError, DegenerateMetricError,
            DegenerateNeighborhoodsError, FloatingPointError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
