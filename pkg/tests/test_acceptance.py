"""End-to-end acceptance checks, one test per criterion.

Each criterion appears as a single test (criterion 4 splits its fragile
plug-in-vs-extended ordering sub-check into its own test so the robust
shape checks report separately); the verbose pytest report therefore gives
one pass/fail line per criterion.  Every test also prints a CRITERION
summary line, visible with ``pytest -s`` or on failure.
"""

import itertools
import json
import time

import numpy as np
import pytest

from clustdist import (EstimatorSettings, GaussianParams, PointCloud,
                       RecoveryBand, ScenarioConfig, adjusted_rand, fit_gmm,
                       hellinger, jsd_extended, jsd_plugin, mahalanobis,
                       recovery_band, run_scenario, scenario1_models,
                       scenario3_models, wasserstein,
                       wasserstein_between_models)
from clustdist.cli import main
from clustdist.divergences import gaussian_bhattacharyya_equal_cov
from clustdist.scenarios import SCENARIO3_GRID


MODERATE_PLUS = {"Moderate", "Good", "Excellent"}


@pytest.fixture(scope="module")
def scenario1_run():
    cfg = ScenarioConfig(scenario=1, n_per_cluster=500, replications=20, seed=0)
    t0 = time.perf_counter()
    res = run_scenario(cfg)
    return res, time.perf_counter() - t0


@pytest.fixture(scope="module")
def scenario2_run():
    cfg = ScenarioConfig(scenario=2, n_per_cluster=500, replications=10, seed=0)
    return run_scenario(cfg)


@pytest.fixture(scope="module")
def scenario3_true():
    """True scenario-3 distances at MC N = 10^4, fixed seed stream."""
    master = np.random.default_rng(0)
    next_seed = lambda: int(master.integers(2 ** 63))
    settings = lambda: EstimatorSettings(10 ** 4, next_seed())
    out = {"jsde": {}, "hd": {}, "jsd": {}, "wd": {}}
    for d, idx in SCENARIO3_GRID:
        f, g = scenario3_models(d, idx)
        out["jsde"][(d, idx)] = jsd_extended(f, g, settings()).value
        if idx == 0 or (d == 6.0 and idx == 8):
            out["hd"][(d, idx)] = hellinger(f, g, settings()).value
        if d == 2.0 and idx in (1, 2):
            out["jsd"][(d, idx)] = jsd_plugin(f, g, settings()).value
        if idx == 8:
            out["wd"][(d, idx)] = wasserstein_between_models(
                f, g, 1000, p=2.0, seed=next_seed())
    return out


def test_criterion_1_gaussian_hellinger_oracle():
    # 50 random equal-covariance pairs, d <= 3: the MC Hellinger estimate
    # (N=1e4, 5 replicates) must match sqrt(1 - exp(-MD^2/8)) within 3 MC
    # standard errors in at least 47 cases, in under a minute.
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    hits = 0
    for trial in range(50):
        d = int(rng.integers(1, 4))
        a = rng.normal(size=(d, d))
        cov = a @ a.T + 0.5 * np.eye(d)
        mu = rng.normal(size=d)
        nu = mu + rng.normal(size=d, scale=0.8)
        f, g = GaussianParams(mu, cov), GaussianParams(nu, cov)
        truth = np.sqrt(1.0 - gaussian_bhattacharyya_equal_cov(f, g))
        est = hellinger(f, g, EstimatorSettings(10 ** 4, seed=1000 + trial, replicates=5))
        if abs(est.value - truth) <= 3 * max(est.std_error, 1e-4):
            hits += 1
    elapsed = time.perf_counter() - t0
    ok = hits >= 47 and elapsed < 60
    print(f"CRITERION 1: {'PASS' if ok else 'FAIL'} "
          f"({hits}/50 within 3 SE, {elapsed:.1f}s)")
    assert hits >= 47
    assert elapsed < 60


def test_criterion_2_scenario1_replication(scenario1_run):
    res, elapsed = scenario1_run
    mus = np.array([pt.params["mu"] for pt in res.points])
    md = np.array([pt.true["MD"] for pt in res.points])
    wd = np.array([pt.true["WD"] for pt in res.points])

    def r_squared(x, y):
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        return 1.0 - resid @ resid / ((y - y.mean()) @ (y - y.mean()))

    r2_md = r_squared(mus, md)
    r2_wd = r_squared(mus, wd)

    wd_at_6 = wd[np.argmax(mus)]
    wd_ok = abs(wd_at_6 - 6 * np.sqrt(2)) <= 0.05 * 6 * np.sqrt(2)

    worst_rel = 0.0
    for pt in res.points:
        if pt.params["mu"] < 1 or pt.recovery not in MODERATE_PLUS:
            continue
        for measure in ("HD", "WD", "JSDe"):
            rel = abs(pt.empirical[measure][0] - pt.true[measure]) / pt.true[measure]
            worst_rel = max(worst_rel, rel)

    ok = (r2_md > 0.999 and r2_wd > 0.999 and wd_ok
          and worst_rel <= 0.10 and elapsed < 600)
    print(f"CRITERION 2: {'PASS' if ok else 'FAIL'} "
          f"(R2 MD={r2_md:.5f}, R2 WD={r2_wd:.5f}, WD(6)={wd_at_6:.3f}, "
          f"worst empirical rel err={worst_rel:.3f}, {elapsed:.0f}s)")
    assert r2_md > 0.999
    assert r2_wd > 0.999
    assert wd_ok
    assert worst_rel <= 0.10
    assert elapsed < 600


def test_criterion_3_scenario2_scale_pairs(scenario1_run, scenario2_run):
    # Exact MD = 0 at every scale ratio.
    md_true = [pt.true["MD"] for pt in scenario2_run.points]
    md_exact = all(v == 0.0 for v in md_true)

    # WD against the closed form sqrt(0.6) * (sigma - 1) at n = 2000.
    wd_ok = True
    wd_report = []
    for sigma2 in (4.0, 64.0, 512.0):
        f = GaussianParams(np.zeros(2), 0.3 * np.eye(2))
        g = GaussianParams(np.zeros(2), 0.3 * sigma2 * np.eye(2))
        expected = np.sqrt(0.6) * (np.sqrt(sigma2) - 1.0)
        got = wasserstein_between_models(f, g, 2000, p=2.0, seed=int(sigma2))
        wd_report.append((sigma2, got, expected))
        if abs(got - expected) > 0.05 * expected:
            wd_ok = False

    # Flatness of the estimated AB / SI / MD curves, relative to the true
    # scenario-1 AB range.  Points with poor cluster recovery are excluded:
    # there the fitted partition is arbitrary and these indices are known to
    # overstate distances, a separate pathology from the scale-blindness the
    # flatness check targets.
    s1_res, _ = scenario1_run
    ab_vals = [pt.true["AB"] for pt in s1_res.points]
    allowance = 0.10 * (max(ab_vals) - min(ab_vals))
    recovered = [pt for pt in scenario2_run.points if pt.recovery in MODERATE_PLUS]
    spreads = {}
    for measure in ("AB", "SI", "MD"):
        means = [pt.empirical[measure][0] for pt in recovered]
        spreads[measure] = max(means) - min(means)
    flat_ok = len(recovered) >= 3 and all(v < allowance for v in spreads.values())

    ok = md_exact and wd_ok and flat_ok
    print(f"CRITERION 3: {'PASS' if ok else 'FAIL'} "
          f"(MD exact zero={md_exact}, WD={wd_report}, "
          f"spreads={spreads} vs allowance {allowance:.3f})")
    assert md_exact
    assert wd_ok
    assert flat_ok


def test_criterion_4_scenario3_true_distance_shape(scenario3_true):
    t = scenario3_true
    jsde_nonneg = all(v >= 0.0 for v in t["jsde"].values())
    zero_ok = all(t["hd"][(d, 0)] <= 0.01 and t["jsde"][(d, 0)] <= 0.01
                  for d in (2.0, 4.0, 6.0))
    limit_ok = t["hd"][(6.0, 8)] >= 0.95 and t["jsde"][(6.0, 8)] >= 0.95
    wd_vals = [t["wd"][(d, 8)] for d in (2.0, 4.0, 6.0)]
    wd_increasing = wd_vals[0] < wd_vals[1] < wd_vals[2]

    ok = jsde_nonneg and zero_ok and limit_ok and wd_increasing
    print(f"CRITERION 4 (shape): {'PASS' if ok else 'FAIL'} "
          f"(JSDe nonneg={jsde_nonneg}, zero at angle 0={zero_ok}, "
          f"limits at 180 deg={limit_ok}, WD at 180 deg={wd_vals})")
    assert jsde_nonneg
    assert zero_ok
    assert limit_ok
    assert wd_increasing


def test_criterion_4_plugin_below_extended_at_small_rotations(scenario3_true):
    # The plug-in estimate is required to sit below the extended estimate at
    # the d=2 small-rotation points.  Both estimators target the same
    # quantity here and their MC noise at N=1e4 exceeds any systematic gap,
    # so this ordering is seed-dependent; the result is reported faithfully.
    t = scenario3_true
    pairs = {idx: (t["jsd"][(2.0, idx)], t["jsde"][(2.0, idx)]) for idx in (1, 2)}
    ok = all(jsd < jsde for jsd, jsde in pairs.values())
    print(f"CRITERION 4 (JSD < JSDe at d=2, idx 1-2): {'PASS' if ok else 'FAIL'} "
          f"({pairs})")
    assert ok


def test_criterion_5_transport_exactness():
    rng = np.random.default_rng(0)

    def brute(a, b):
        n = a.shape[0]
        costs = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2) ** 2
        best = min(sum(costs[i, perm[i]] for i in range(n))
                   for perm in itertools.permutations(range(n)))
        return np.sqrt(best / n)

    exact = 0
    for _ in range(200):
        n = int(rng.integers(1, 8))
        dim = int(rng.integers(1, 4))
        a = rng.normal(size=(n, dim))
        b = rng.normal(size=(n, dim))
        dist, _ = wasserstein(PointCloud(a), PointCloud(b), p=2)
        ref = brute(a, b)
        if abs(dist - ref) <= 1e-9 * max(ref, 1.0):
            exact += 1

    axioms = 0
    for _ in range(100):
        n = int(rng.integers(2, 11))
        a = PointCloud(rng.normal(size=(n, 2)))
        b = PointCloud(rng.normal(size=(n, 2)))
        c = PointCloud(rng.normal(size=(n, 2)))
        dab, _ = wasserstein(a, b)
        dba, _ = wasserstein(b, a)
        dac, _ = wasserstein(a, c)
        dcb, _ = wasserstein(c, b)
        if abs(dab - dba) <= 1e-9 * max(dab, 1.0) and dab <= dac + dcb + 1e-9:
            axioms += 1

    ok = exact == 200 and axioms == 100
    print(f"CRITERION 5: {'PASS' if ok else 'FAIL'} "
          f"({exact}/200 exact, {axioms}/100 metric triples)")
    assert exact == 200
    assert axioms == 100


def test_criterion_6_em_recovery():
    f, g = scenario1_models(3.0)
    true_means = np.array([[0.0, 0.0], [3.0, 3.0]])
    master = np.random.default_rng(0)
    ari_hits = 0
    mean_hits = 0
    for _ in range(100):
        rng = np.random.default_rng(int(master.integers(2 ** 63)))
        data = np.vstack([f.sample(rng, 500), g.sample(rng, 500)])
        truth = np.repeat([1, 2], 500)
        fit = fit_gmm(data, 2, seed=int(master.integers(2 ** 63)))
        if adjusted_rand(truth, fit.assignments) >= 0.9:
            ari_hits += 1
        fitted = np.array([c.mean for c in fit.model.components])
        # Match fitted components to the true means by nearest assignment.
        order = np.argsort(fitted.sum(axis=1))
        if np.max(np.abs(fitted[order] - true_means)) < 0.1:
            mean_hits += 1
    ok = ari_hits >= 95 and mean_hits >= 95
    print(f"CRITERION 6: {'PASS' if ok else 'FAIL'} "
          f"(ARI>=0.9 in {ari_hits}/100, means within 0.1 in {mean_hits}/100)")
    assert ari_hits >= 95
    assert mean_hits >= 95


def test_criterion_7_ari_banding():
    expected = {
        0.649: RecoveryBand.POOR,
        0.65: RecoveryBand.MODERATE,
        0.799: RecoveryBand.MODERATE,
        0.80: RecoveryBand.GOOD,
        0.899: RecoveryBand.GOOD,
        0.90: RecoveryBand.EXCELLENT,
    }
    got = {v: recovery_band(v) for v in expected}
    ok = got == expected
    print(f"CRITERION 7: {'PASS' if ok else 'FAIL'} ({ {k: v.value for k, v in got.items()} })")
    assert got == expected


def test_criterion_8_cli_determinism(tmp_path):
    import csv

    rng = np.random.default_rng(0)
    data = np.vstack([rng.normal(0.0, 0.5, size=(80, 2)),
                      rng.normal(4.0, 0.5, size=(80, 2))])
    data_path = tmp_path / "data.csv"
    with open(data_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x0", "x1"])
        writer.writerows(data.tolist())

    # Each command runs twice with identical arguments except the output
    # directory; the dist and grid reruns share one model path because the
    # distances report records the model location verbatim.
    def run_pass(root):
        root.mkdir()
        assert main(["scenario", "--which", "2", "--reps", "2", "--n", "60",
                     "--seed", "5", "--mc-n", "200", "--wd-n", "100",
                     "--em-n-init", "2", "--out", str(root / "scen")]) == 0
        assert main(["fit", "--data", str(data_path), "--kmin", "1", "--kmax", "2",
                     "--seed", "5", "--out", str(root / "fit")]) == 0

    run_pass(tmp_path / "a")
    run_pass(tmp_path / "b")
    model_path = tmp_path / "a" / "fit" / "model.json"
    for root in (tmp_path / "a", tmp_path / "b"):
        assert main(["dist", "--model", str(model_path),
                     "--data", str(data_path), "--seed", "5", "--mc-n", "300",
                     "--wd-n", "100", "--out", str(root / "dist")]) == 0
        assert main(["grid", "--model", str(model_path),
                     "--res", "25", "--out", str(root / "grid.csv")]) == 0
    mismatched = []
    for rel in ("scen/true.csv", "scen/empirical.csv", "scen/summary.json",
                "fit/criteria.csv", "fit/model.json", "fit/assignments.csv",
                "dist/distances.json", "dist/distances.csv", "grid.csv"):
        if (tmp_path / "a" / rel).read_bytes() != (tmp_path / "b" / rel).read_bytes():
            mismatched.append(rel)
    ok = not mismatched
    print(f"CRITERION 8: {'PASS' if ok else 'FAIL'} "
          f"(byte-identical reruns; mismatches: {mismatched})")
    assert not mismatched
