"""Command-line front end: CSV in, result.json plus diagnostic tables out.

Every command reads one numeric CSV (header row, comma separated, decimal
point), runs the requested estimator, and writes ``result.json`` together
with the command's diagnostic CSV/JSON sidecar pairs into the output
directory.  Outputs are byte-identical for identical inputs, flags and seed.
Exit codes: 0 success, 1 data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import calibration, diagnostics, discriminant, lts, mcd, mvreg, robpca
from .dataset import Dataset, validate
from .exceptions import RobustryError
from .mvreg import _residual_distances
from .univariate import chi2_quantile

SCHEMA_VERSION = 1


class UsageError(Exception):
    """Bad flag combination or reference to a missing column."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robustmv",
        description="High-breakdown robust multivariate estimators with outlier-map diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "mcd": "robust location/scatter and robust distances",
        "lts": "robust regression of one response column",
        "mvreg": "robust multivariate regression",
        "qda": "robust quadratic discriminant analysis (labels in --response)",
        "lda": "robust linear discriminant analysis (labels in --response)",
        "robpca": "robust principal components",
        "rpcr": "robust principal component regression",
        "simpls": "classical partial least squares",
        "rsimpls": "robust partial least squares",
        "rmsecv": "leave-one-out component selection curve",
    }
    for name, help_text in commands.items():
        s = sub.add_parser(name, help=help_text)
        s.add_argument("input", help="input CSV (header row, comma separated)")
        s.add_argument("--alpha", type=float, default=0.75)
        s.add_argument("--h", type=int, default=None)
        s.add_argument("--k", type=int, default=None)
        s.add_argument("--nstarts", type=int, default=500)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--cutoff-prob", type=float, default=0.975, dest="cutoff_prob")
        s.add_argument("--response", default=None,
                       help="comma-separated response column names (label column for qda/lda)")
        s.add_argument("--method", default="simpls",
                       choices=["simpls", "rsimpls", "rpcr"])
        s.add_argument("--kmax", type=int, default=None)
        s.add_argument("--robust", action="store_true")
        s.add_argument("--out", default=".", help="output directory")
    return parser


def read_csv(path) -> Dataset:
    """Parse a numeric CSV with a header row, reporting the first bad cell."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise RobustryError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise RobustryError(f"{path}: file is empty")
    header = [c.strip() for c in rows[0]]
    width = len(header)
    values = []
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != width:
            raise RobustryError(
                f"{path}: row {i} has {len(row)} cells, header has {width}"
            )
        parsed = []
        for j, cell in enumerate(row, start=1):
            try:
                parsed.append(float(cell))
            except ValueError as exc:
                raise RobustryError(
                    f"{path}: malformed numeric cell at row {i}, column {j} ({cell!r})"
                ) from exc
        values.append(parsed)
    if not values:
        raise RobustryError(f"{path}: no data rows")
    return validate(values, header)


def _split_response(data: Dataset, response: str | None, need: bool = True):
    if response is None:
        if need:
            raise UsageError("--response is required for this command")
        return data, None
    names = [c.strip() for c in response.split(",") if c.strip()]
    missing = [c for c in names if c not in data.names]
    if missing:
        raise UsageError(f"response column(s) not in header: {', '.join(missing)}")
    y_idx = [data.names.index(c) for c in names]
    x_idx = [j for j in range(data.p) if j not in y_idx]
    if not x_idx:
        raise UsageError("no predictor columns left after removing the response")
    x = validate(data.values[:, x_idx], [data.names[j] for j in x_idx])
    y = validate(data.values[:, y_idx], names)
    return x, y


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _write_result(out_dir: Path, payload: dict) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "result.json"
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _location_scatter_payload(est) -> dict:
    return {
        "mu": est.mu,
        "sigma": est.sigma,
        "det": est.det,
        "h": est.h,
        "kind": est.kind,
        "consistency_factor": est.consistency,
        "exact_fit": est.exact_fit,
    }


def _mcd_cfg(args, seed_shift: int = 0) -> mcd.McdConfig:
    return mcd.McdConfig(
        alpha=args.alpha,
        h=args.h,
        nstarts=args.nstarts,
        cutoff_prob=args.cutoff_prob,
        seed=args.seed + seed_shift,
    )


def _cmd_mcd(args, out_dir: Path) -> dict:
    data = read_csv(args.input)
    result = mcd.fast_mcd(data, _mcd_cfg(args))
    cutoff = float(np.sqrt(chi2_quantile(data.p, args.cutoff_prob)))
    diagnostics.index_distance_table(
        np.where(np.isfinite(result.robust_distances), result.robust_distances, 0.0),
        cutoff, args.cutoff_prob,
    ).write(out_dir, "robust_distance_index")
    mean = data.values.mean(axis=0)
    centered = data.values - mean
    classical = centered.T @ centered / max(data.n - 1, 1)
    try:
        md = mcd.mahalanobis_distances(
            data, type(result.raw)(mean, classical, float(np.linalg.det(classical)), data.n)
        )
        diagnostics.dd_plot_table(
            md,
            np.where(np.isfinite(result.robust_distances), result.robust_distances, md.max() + cutoff),
            data.p, args.cutoff_prob,
        ).write(out_dir, "dd_plot")
    except RobustryError:
        pass  # classical scatter singular: skip the comparison plot
    return {
        "raw": _location_scatter_payload(result.raw),
        "reweighted": _location_scatter_payload(result.reweighted),
        "best_subset": list(result.best_subset),
        "weights": result.weights,
        "robust_distances": result.robust_distances,
        "exact_fit": result.exact_fit,
        "distance_cutoff": cutoff,
    }


def _cmd_lts(args, out_dir: Path) -> dict:
    data = read_csv(args.input)
    x, y = _split_response(data, args.response)
    if y.p != 1:
        raise UsageError("lts needs exactly one response column")
    cfg = _mcd_cfg(args)
    raw = lts.fast_lts(x, y.values[:, 0], cfg)
    fit = lts.reweight_lts(x, y.values[:, 0], raw, args.cutoff_prob)
    x_mcd = mcd.fast_mcd(x, cfg)
    lts.regression_outlier_map(
        x, y.values[:, 0], fit, x_mcd, args.cutoff_prob
    ).table().write(out_dir, "regression_map")
    return {
        "raw": {"theta": raw.theta, "sigma": raw.sigma, "objective": raw.objective},
        "reweighted": {"theta": fit.theta, "sigma": fit.sigma},
        "best_subset": list(raw.best_subset),
        "weights": fit.weights,
        "std_residuals": fit.std_residuals,
        "exact_fit": raw.exact_fit,
    }


def _cmd_mvreg(args, out_dir: Path) -> dict:
    data = read_csv(args.input)
    x, y = _split_response(data, args.response)
    cfg = _mcd_cfg(args)
    fit = mvreg.mcd_regression(x, y, cfg)
    x_mcd = mcd.fast_mcd(x, cfg)
    mvreg.mvreg_outlier_map(x, y, fit, x_mcd, args.cutoff_prob).table().write(
        out_dir, "mvreg_map"
    )
    return {
        "B": fit.B,
        "alpha": fit.alpha,
        "sigma_eps": fit.sigma_eps,
        "weights": fit.weights,
        "residual_distances": fit.residual_distances,
        "exact_fit": fit.exact_fit,
    }


def _cmd_discriminant(args, out_dir: Path, mode: str) -> dict:
    data = read_csv(args.input)
    x, y = _split_response(data, args.response)
    labels = y.values[:, 0]
    if y.p != 1:
        raise UsageError("qda/lda need exactly one label column in --response")
    fit = discriminant.fit_rqda if mode == "quadratic" else discriminant.fit_rlda
    model = fit(x, labels, _mcd_cfg(args))
    payload = {
        "mode": model.mode,
        "groups": [
            {
                "label": model.labels[j],
                "mu": model.mu[j],
                "sigma": model.sigma[j],
                "count": model.counts[j],
                "prior": model.priors[j],
            }
            for j in range(model.n_groups)
        ],
        "assignments": discriminant.classify(model, x.values),
    }
    if model.pooled_sigma is not None:
        payload["pooled_sigma"] = model.pooled_sigma
    return payload


def _cmd_robpca(args, out_dir: Path) -> dict:
    data = read_csv(args.input)
    model = robpca.robpca(data, k=args.k, cfg=_mcd_cfg(args))
    robpca.pca_outlier_map(model, data, args.cutoff_prob).table().write(
        out_dir, "pca_map"
    )
    return {
        "center": model.center,
        "loadings": model.loadings,
        "eigenvalues": model.eigenvalues,
        "k": model.k,
        "od_cutoff": model.od_cutoff,
        "sd_cutoff": model.sd_cutoff,
        "od_degenerate": model.od_degenerate,
    }


def _score_map(T, score_scatter, residuals, sigma_eps, k, q, cutoff_prob, out_dir, stem):
    """Regression-style outlier map in score space shared by the calibration fits."""
    eig, vec = np.linalg.eigh(score_scatter)
    eig = np.maximum(eig, np.finfo(float).tiny)
    z = T @ (vec / np.sqrt(eig))
    sd = np.sqrt(np.einsum("ij,ij->i", z, z))
    x_cutoff = float(np.sqrt(chi2_quantile(k, cutoff_prob)))
    y_cutoff = float(np.sqrt(chi2_quantile(q, cutoff_prob)))
    if q == 1:
        sigma = float(np.sqrt(max(sigma_eps[0, 0], np.finfo(float).tiny)))
        y_vals = residuals[:, 0] / sigma
        kind = "regression_map"
    else:
        y_vals, _ = _residual_distances(residuals, sigma_eps)
        kind = "mvreg_map"
    flags = diagnostics.classify_map_points(
        sd > x_cutoff, np.abs(y_vals) > y_cutoff, "vertical_outlier"
    )
    diagnostics.OutlierMap(
        kind=kind, x_dist=sd, y_dist=y_vals, flags=flags,
        x_cutoff=x_cutoff, y_cutoff=y_cutoff, cutoff_prob=cutoff_prob,
    ).table().write(out_dir, stem)


def _cmd_pls(args, out_dir: Path, robust: bool) -> dict:
    data = read_csv(args.input)
    x, y = _split_response(data, args.response)
    if args.k is None:
        raise UsageError("--k is required for simpls/rsimpls")
    cfg = _mcd_cfg(args)
    if robust:
        model = calibration.rsimpls(x, y, args.k, cfg)
        T = (x.values - model.x_center) @ model.weights_R
        # Robust score spread: rows the second-stage regression kept.
        score_scatter = np.cov(T[model.row_weights.astype(bool)], rowvar=False, ddof=1)
    else:
        model = calibration.simpls(x, y, args.k)
        T = (x.values - model.x_center) @ model.weights_R
        score_scatter = np.cov(T, rowvar=False, ddof=1)
    score_scatter = np.atleast_2d(score_scatter)
    residuals = y.values - model.predict(x.values)
    _score_map(
        T, score_scatter, residuals, model.sigma_eps,
        args.k, y.p, args.cutoff_prob, out_dir, "score_regression_map",
    )
    return {
        "coefficients": model.coefficients,
        "intercept": model.intercept,
        "x_center": model.x_center,
        "y_center": model.y_center,
        "weights_R": model.weights_R,
        "y_weights_Q": model.y_weights_Q,
        "x_loadings": model.x_loadings,
        "k": model.k,
        "robust": model.robust,
        "row_weights": model.row_weights,
    }


def _cmd_rpcr(args, out_dir: Path) -> dict:
    data = read_csv(args.input)
    x, y = _split_response(data, args.response)
    if args.k is None:
        raise UsageError("--k is required for rpcr")
    cfg = _mcd_cfg(args)
    model = calibration.rpcr(x, y, args.k, cfg)
    robpca.pca_outlier_map(model.pca, x, args.cutoff_prob).table().write(
        out_dir, "pca_map"
    )
    T = robpca.scores(model.pca, x)
    residuals = y.values - model.predict(x.values)
    _score_map(
        T, np.diag(model.pca.eigenvalues), residuals, model.regression.sigma_eps,
        args.k, y.p, args.cutoff_prob, out_dir, "score_regression_map",
    )
    return {
        "coefficients": model.coefficients,
        "intercept": model.intercept,
        "k": model.k,
        "pca": {
            "center": model.pca.center,
            "eigenvalues": model.pca.eigenvalues,
            "od_cutoff": model.pca.od_cutoff,
            "sd_cutoff": model.pca.sd_cutoff,
        },
        "regression_weights": model.regression.weights,
    }


def _cmd_rmsecv(args, out_dir: Path) -> dict:
    data = read_csv(args.input)
    x, y = _split_response(data, args.response)
    if args.kmax is None:
        raise UsageError("--kmax is required for rmsecv")
    curve = calibration.rmsecv(
        x, y, args.kmax, method=args.method, robust=args.robust, cfg=_mcd_cfg(args)
    )
    return {
        "method": args.method,
        "robust": args.robust,
        "k_values": list(curve.k_values),
        "rmsecv": list(curve.rmsecv),
        "selected_k": curve.selected_k,
    }


def run(args) -> int:
    out_dir = Path(args.out)
    handlers = {
        "mcd": lambda: _cmd_mcd(args, out_dir),
        "lts": lambda: _cmd_lts(args, out_dir),
        "mvreg": lambda: _cmd_mvreg(args, out_dir),
        "qda": lambda: _cmd_discriminant(args, out_dir, "quadratic"),
        "lda": lambda: _cmd_discriminant(args, out_dir, "linear"),
        "robpca": lambda: _cmd_robpca(args, out_dir),
        "rpcr": lambda: _cmd_rpcr(args, out_dir),
        "simpls": lambda: _cmd_pls(args, out_dir, robust=False),
        "rsimpls": lambda: _cmd_pls(args, out_dir, robust=True),
        "rmsecv": lambda: _cmd_rmsecv(args, out_dir),
    }
    payload = handlers[args.command]()
    payload.update(
        {
            "schema": SCHEMA_VERSION,
            "command": args.command,
            "seed": args.seed,
            "alpha": args.alpha,
            "cutoff_prob": args.cutoff_prob,
        }
    )
    _write_result(out_dir, payload)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (RobustryError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
