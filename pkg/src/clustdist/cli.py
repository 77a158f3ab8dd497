"""Command-line surface: scenario replication, mixture fitting, distance reports.

Subcommands
-----------
scenario : run one simulation scenario, writing true.csv / empirical.csv /
           summary.json into an output directory.
fit      : fit Gaussian mixtures over a K range to a CSV dataset, writing
           criteria.csv, model.json (BIC-selected), assignments.csv.
dist     : pairwise distance report for the clusters of a model.json,
           writing distances.json and distances.csv.
grid     : density-grid emitter for two chosen dimensions of a model.json
           (plot-ready CSV, no rendering).

All commands are deterministic given --seed: identical invocations produce
byte-identical output files.  Exit codes: 0 success, 1 runtime failure,
2 argument or input validation failure.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import sys
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import special

from .distributions import GaussianParams, GHParams
from .divergences import (EstimatorSettings, hellinger, jsd_extended, mahalanobis)
from .indices import (LabeledDataset, adjusted_rand, average_between, scale_columns,
                      separation_index)
from .mixture import fit_gmm, information_criteria, map_assign
from .scenarios import ScenarioConfig, ScenarioResult, run_scenario
from .transport import wasserstein_between_models

__all__ = ["main", "load_model_json", "dump_model_json"]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


class CliError(Exception):
    """Input validation failure; maps to exit code 2."""


# ---------------------------------------------------------------------------
# model.json serialization

def dump_model_json(weights, components, path: Path, metadata: Optional[dict] = None) -> None:
    comps = []
    for w, c in zip(weights, components):
        if isinstance(c, GaussianParams):
            comps.append({
                "weight": float(w),
                "type": "gaussian",
                "mean": [float(v) for v in c.mean],
                "covariance": [[float(v) for v in row] for row in c.covariance],
            })
        elif isinstance(c, GHParams):
            comps.append({
                "weight": float(w),
                "type": "gh",
                "location": [float(v) for v in c.location],
                "scale": [[float(v) for v in row] for row in c.scale],
                "skewness": [float(v) for v in c.skewness],
                "index": float(c.index),
                "concentration": float(c.concentration),
            })
        else:
            raise TypeError(f"unsupported component type {type(c)!r}")
    doc = {"dim": int(components[0].dim), "components": comps}
    if metadata:
        doc["metadata"] = metadata
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_model_json(path: Path) -> Tuple[np.ndarray, list]:
    """Parse model.json into (weights, components)."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read model file {path}: {exc}") from exc
    try:
        weights = np.array([c["weight"] for c in doc["components"]], dtype=float)
        components = []
        for c in doc["components"]:
            if c["type"] == "gaussian":
                components.append(GaussianParams(np.array(c["mean"]), np.array(c["covariance"])))
            elif c["type"] == "gh":
                components.append(GHParams(
                    location=np.array(c["location"]), scale=np.array(c["scale"]),
                    skewness=np.array(c["skewness"]), index=c["index"],
                    concentration=c["concentration"]))
            else:
                raise CliError(f"unknown component type {c['type']!r}")
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"malformed model file {path}: {exc}") from exc
    if abs(weights.sum() - 1.0) > 1e-6 or np.any(weights < 0):
        raise CliError("component weights must be nonnegative and sum to 1")
    return weights, components


# ---------------------------------------------------------------------------
# CSV helpers

def _write_csv(path: Path, header: List[str], rows: List[List]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])


def _read_numeric_csv(path: Path) -> Tuple[List[str], np.ndarray]:
    """Read a headered numeric CSV, with cell-level diagnostics on failure."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise CliError(f"{path}: file is empty")
            rows = []
            for r, record in enumerate(reader, start=2):
                if not record:
                    continue
                if len(record) != len(header):
                    raise CliError(f"{path}: row {r} has {len(record)} cells, expected {len(header)}")
                parsed = []
                for c, cell in enumerate(record, start=1):
                    try:
                        parsed.append(float(cell))
                    except ValueError:
                        raise CliError(f"{path}: non-numeric cell at row {r}, column {c}: {cell!r}")
                rows.append(parsed)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise CliError(f"{path}: no data rows")
    return header, np.asarray(rows, dtype=float)


# ---------------------------------------------------------------------------
# scenario

def _cmd_scenario(args) -> int:
    if args.which not in (1, 2, 3):
        raise CliError("--which must be 1, 2, or 3")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = ScenarioConfig(
        scenario=args.which, n_per_cluster=args.n, replications=args.reps,
        seed=args.seed, mc_samples=args.mc_n, wd_samples=args.wd_n,
        em_n_init=args.em_n_init,
    )
    result = run_scenario(cfg)
    _write_scenario_outputs(result, out)
    return 0


def _write_scenario_outputs(result: ScenarioResult, out: Path) -> None:
    fields = result.param_fields
    true_rows = []
    emp_rows = []
    for pt in result.points:
        base = [pt.params[f] for f in fields]
        for measure in sorted(pt.true):
            true_rows.append(base + [measure, pt.true[measure]])
        if pt.empirical is not None:
            for measure in sorted(pt.empirical):
                mean, std = pt.empirical[measure]
                emp_rows.append(base + [measure, mean, std])
    _write_csv(out / "true.csv", fields + ["measure", "value"], true_rows)
    if any(pt.empirical is not None for pt in result.points):
        _write_csv(out / "empirical.csv", fields + ["measure", "mean", "std"], emp_rows)

    cfg = result.config
    summary = {
        "scenario": result.scenario,
        "settings": {
            "n_per_cluster": cfg.n_per_cluster, "replications": cfg.replications,
            "seed": cfg.seed, "mc_samples": cfg.mc_samples,
            "mc_replicates": cfg.mc_replicates, "wd_samples": cfg.wd_samples,
            "si_proportion": cfg.si_proportion, "em_n_init": cfg.em_n_init,
        },
        "empirical_pathway": "not applicable (no MGH mixture fitting)"
        if result.scenario == 3 else "included",
        "points": [
            {
                "params": pt.params,
                "true": pt.true,
                "empirical": None if pt.empirical is None else {
                    m: {"mean": v[0], "std": v[1]} for m, v in pt.empirical.items()},
                "mean_ari": pt.mean_ari,
                "recovery": pt.recovery,
                "n_failed_replications": pt.n_failed,
            }
            for pt in result.points
        ],
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# fit

def _cmd_fit(args) -> int:
    if args.kmin < 1 or args.kmax < args.kmin:
        raise CliError("need 1 <= kmin <= kmax")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _, data = _read_numeric_csv(Path(args.data))
    n, d = data.shape
    if n <= args.kmax * d:
        raise CliError(f"{args.data}: only {n} rows; need more than kmax*d = {args.kmax * d}")

    criteria_rows = []
    best = None
    for k in range(args.kmin, args.kmax + 1):
        fit = fit_gmm(data, k, n_init=args.n_init, seed=args.seed + k)
        criteria_rows.append([k, fit.log_likelihood, fit.bic, fit.aic, fit.icl,
                              int(fit.converged), fit.iterations])
        if best is None or fit.bic < best[1].bic:
            best = (k, fit)
    _write_csv(out / "criteria.csv",
               ["k", "log_likelihood", "bic", "aic", "icl", "converged", "iterations"],
               criteria_rows)

    k_sel, fit = best
    dump_model_json(fit.model.weights, fit.model.components, out / "model.json",
                    metadata={"selected_k": k_sel, "criterion": "bic", "seed": args.seed,
                              "n_init": args.n_init, "source_rows": n})
    max_resp = fit.responsibilities[np.arange(n), fit.assignments - 1]
    assign_rows = [[int(i), int(lab), float(mr)]
                   for i, (lab, mr) in enumerate(zip(fit.assignments, max_resp))]
    _write_csv(out / "assignments.csv", ["row", "label", "max_responsibility"], assign_rows)
    return 0


# ---------------------------------------------------------------------------
# dist

def _load_labels(path: Path, n_expected: int) -> np.ndarray:
    header, arr = _read_numeric_csv(path)
    if "label" in header:
        col = header.index("label")
    elif arr.shape[1] == 1:
        col = 0
    else:
        raise CliError(f"{path}: no 'label' column found")
    if arr.shape[0] != n_expected:
        raise CliError(f"{path}: {arr.shape[0]} labels for {n_expected} data rows")
    return arr[:, col].astype(int)


def _cmd_dist(args) -> int:
    if args.labels and not args.data:
        raise CliError("--labels requires --data")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    weights, components = load_model_json(Path(args.model))
    k = len(components)
    all_gaussian = all(isinstance(c, GaussianParams) for c in components)

    data = labels = None
    if args.data:
        _, data = _read_numeric_csv(Path(args.data))
        if data.shape[1] != components[0].dim:
            raise CliError(f"{args.data}: dimension {data.shape[1]} does not match model dim "
                           f"{components[0].dim}")
        if args.labels:
            labels = _load_labels(Path(args.labels), data.shape[0])
        else:
            labels, _ = map_assign_from(weights, components, data)

    master = np.random.default_rng(args.seed)
    next_seed = lambda: int(master.integers(2 ** 63))
    pairs = []
    for i, j in itertools.combinations(range(k), 2):
        ci, cj = components[i], components[j]
        measures: Dict[str, Dict[str, float]] = {}
        hd = hellinger(ci, cj, EstimatorSettings(args.mc_n, next_seed(), args.mc_replicates))
        measures["HD"] = {"value": hd.value, "std_error": hd.std_error}
        je = jsd_extended(ci, cj, EstimatorSettings(args.mc_n, next_seed(), args.mc_replicates))
        measures["JSDe"] = {"value": je.value, "std_error": je.std_error}
        wd = wasserstein_between_models(ci, cj, args.wd_n, p=args.p, seed=next_seed())
        measures["WD"] = {"value": wd, "std_error": 0.0}
        if all_gaussian:
            md = mahalanobis(ci, cj, weights=(weights[i], weights[j]))
            measures["MD"] = {"value": md.value, "std_error": 0.0}
        if data is not None and labels is not None:
            li, lj = i + 1, j + 1
            present = set(np.unique(labels))
            if li in present and lj in present:
                scaled = LabeledDataset(scale_columns(data), labels)
                measures["AB"] = {"value": average_between(scaled, li, lj), "std_error": 0.0}
                measures["SI"] = {"value": separation_index(scaled, li, lj, args.si_prop),
                                  "std_error": 0.0}
        pairs.append({"cluster_i": i + 1, "cluster_j": j + 1, "measures": measures})

    fit_summary = {"k": k}
    if data is not None and all_gaussian:
        from .mixture import GaussianMixture
        model = GaussianMixture(weights, list(components))
        loglik = float(model.log_density(data).sum())
        _, resp = map_assign(model, data)
        bic, aic, icl = information_criteria(loglik, resp, data.shape[0], k, data.shape[1])
        fit_summary.update({"log_likelihood": loglik, "bic": bic, "aic": aic, "icl": icl})
    if data is not None and args.labels:
        map_labels, _ = map_assign_from(weights, components, data) if all_gaussian else (None, None)
        if map_labels is not None:
            fit_summary["ari_vs_provided_labels"] = adjusted_rand(labels, map_labels)

    report = {
        "model": str(args.model),
        "settings": {
            "mc_samples": args.mc_n, "mc_replicates": args.mc_replicates,
            "wd_samples": args.wd_n, "p": args.p, "si_proportion": args.si_prop,
            "seed": args.seed,
        },
        "fit_summary": fit_summary,
        "pairs": pairs,
    }
    (out / "distances.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    rows = []
    for pair in pairs:
        for measure in sorted(pair["measures"]):
            mv = pair["measures"][measure]
            rows.append([pair["cluster_i"], pair["cluster_j"], measure,
                         mv["value"], mv["std_error"]])
    _write_csv(out / "distances.csv",
               ["cluster_i", "cluster_j", "measure", "value", "std_error"], rows)
    return 0


def map_assign_from(weights, components, data):
    """MAP assignment for an all-Gaussian model loaded from JSON."""
    from .mixture import GaussianMixture
    if not all(isinstance(c, GaussianParams) for c in components):
        raise CliError("MAP assignment requires an all-Gaussian model; pass --labels instead")
    return map_assign(GaussianMixture(np.asarray(weights), list(components)), data)


# ---------------------------------------------------------------------------
# grid

def _gh_moments(c: GHParams) -> Tuple[np.ndarray, np.ndarray]:
    """(mean, diagonal of covariance) of a GH component."""
    omega, lam = c.concentration, c.index
    ew = special.kve(lam + 1, omega) / special.kve(lam, omega)
    ew2 = special.kve(lam + 2, omega) / special.kve(lam, omega)
    var_w = ew2 - ew ** 2
    mean = c.location + ew * c.skewness
    var_diag = ew * np.diag(c.scale) + var_w * c.skewness ** 2
    return mean, var_diag


def _component_center_spread(c) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(c, GaussianParams):
        return c.mean, np.sqrt(np.diag(c.covariance))
    mean, var_diag = _gh_moments(c)
    return mean, np.sqrt(var_diag)


def _marginal_density(c, dims: Tuple[int, int], xy: np.ndarray) -> np.ndarray:
    """Bivariate density of one component on the chosen dims.

    Exact marginal for Gaussian components (covariance submatrix); for GH
    components, a conditional slice with the remaining coordinates fixed at
    the component location (documented approximation).
    """
    i, j = dims
    if isinstance(c, GaussianParams):
        sub = GaussianParams(c.mean[[i, j]], c.covariance[np.ix_([i, j], [i, j])])
        return np.exp(sub.log_density(xy))
    full = np.tile(c.location, (xy.shape[0], 1))
    full[:, i] = xy[:, 0]
    full[:, j] = xy[:, 1]
    return np.exp(c.log_density(full))


def _cmd_grid(args) -> int:
    weights, components = load_model_json(Path(args.model))
    d = components[0].dim
    try:
        i, j = (int(v) for v in args.dims.split(","))
    except ValueError:
        raise CliError(f"--dims must be two comma-separated indices, got {args.dims!r}")
    if not (0 <= i < d and 0 <= j < d) or i == j:
        raise CliError(f"--dims indices must be distinct and within 0..{d - 1}")
    if args.res < 1:
        raise CliError("--res must be >= 1")

    if args.range == "auto":
        los, his = [], []
        for c in components:
            center, spread = _component_center_spread(c)
            los.append([center[i] - 4 * spread[i], center[j] - 4 * spread[j]])
            his.append([center[i] + 4 * spread[i], center[j] + 4 * spread[j]])
        (x0, y0), (x1, y1) = np.min(los, axis=0), np.max(his, axis=0)
    else:
        try:
            x0, x1, y0, y1 = (float(v) for v in args.range.split(","))
        except ValueError:
            raise CliError(f"--range must be 'auto' or x0,x1,y0,y1, got {args.range!r}")
        if x1 <= x0 or y1 <= y0:
            raise CliError("--range bounds must satisfy x0 < x1 and y0 < y1")

    xs = np.linspace(x0, x1, args.res)
    ys = np.linspace(y0, y1, args.res)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    xy = np.column_stack([gx.ravel(), gy.ravel()])
    rows = []
    for ci, c in enumerate(components, start=1):
        dens = _marginal_density(c, (i, j), xy)
        for (x, y), v in zip(xy, dens):
            rows.append([float(x), float(y), ci, float(v)])
    _write_csv(Path(args.out), ["x", "y", "component", "density"], rows)
    return 0


# ---------------------------------------------------------------------------
# argument parsing

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clustdist",
                                     description="Distances between cluster distributions")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scenario", help="run a simulation scenario")
    p.add_argument("--which", type=int, required=True, help="scenario number: 1, 2, or 3")
    p.add_argument("--reps", type=int, default=100, help="replications per grid point")
    p.add_argument("--n", type=int, default=500, help="observations per cluster")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--mc-n", type=int, default=1000, help="Monte Carlo sample count")
    p.add_argument("--wd-n", type=int, default=1000, help="samples per cloud for WD")
    p.add_argument("--em-n-init", type=int, default=10, help="EM restarts per fit")
    p.set_defaults(func=_cmd_scenario)

    p = sub.add_parser("fit", help="fit Gaussian mixtures over a K range")
    p.add_argument("--data", required=True, help="CSV with header row and numeric columns")
    p.add_argument("--kmin", type=int, default=1)
    p.add_argument("--kmax", type=int, default=5)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n-init", type=int, default=10)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("dist", help="pairwise distance report for a fitted model")
    p.add_argument("--model", required=True, help="model.json path")
    p.add_argument("--data", default=None, help="CSV dataset (enables AB/SI and fit summary)")
    p.add_argument("--labels", default=None, help="assignments.csv with a 'label' column")
    p.add_argument("--mc-n", type=int, default=1000)
    p.add_argument("--mc-replicates", type=int, default=1)
    p.add_argument("--wd-n", type=int, default=1000)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--si-prop", type=float, default=0.10)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_dist)

    p = sub.add_parser("grid", help="density grid for two dimensions of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--dims", default="0,1", help="two 0-based dimension indices, e.g. 0,1")
    p.add_argument("--range", default="auto", help="'auto' or x0,x1,y0,y1")
    p.add_argument("--res", type=int, default=200, help="grid resolution per axis")
    p.add_argument("--out", required=True, help="output CSV file")
    p.set_defaults(func=_cmd_grid)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2
    if getattr(args, "seed", None) is None:
        # No seed given: generate one so outputs still record how to reproduce.
        args.seed = int(np.random.SeedSequence().entropy % (2 ** 63))
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
