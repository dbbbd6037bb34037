"""Acceptance suite: one test per criterion, printing PASS/FAIL lines.

Statistical thresholds are fixed here, not tuned at run time.  The rigidity
trend thresholds were pinned by a recorded oracle run before this module
was written (seed 20260811; rho scan at N = 10^6, sequence-measure
correlations at 150k importance samples, process level at 60k paths):

    rho   (1 - rho(2^k), k=2..14): 52 significant decreasing pairs, 0 increasing
    C_Q   (rising to plateau):     34 significant pairs, 0 counter-trend
    C_P   (rising to plateau):     29 significant pairs, 0 counter-trend
    rho(2^14) = 0.89269 +- 0.00054, matching the closed form 0.891806

The acceptance run uses a different seed (42) and must reproduce at least
half the oracle's significant pair counts with at most one counter-trend
pair, plus a final-lag confidence interval containing the closed form.

Marginal-law runs (criterion 4) first calibrate the sampler's throughput
and fail fast with the full arithmetic when the required point count cannot
fit the stated runtime budget on this machine; sub-cases that fit run in
full at the stated N, eps and tolerances.
"""

import math
import time

import numpy as np
import pytest

from maharam import rng as rngmod
from maharam.diagnostics import (
    cf_consistency,
    hill_tail_index,
    idp_rigidity_correlation,
    koopman_correlation,
    monotone_trend,
    rigidity_scan,
    sum_stability_test,
)
from maharam.levy import StableConfig
from maharam.simulate import expected_points, marginal_samples, simulate_paths
from maharam.systems import BernoulliShift, FSpec, Odometer
from maharam.verify import (
    verify_cocycle,
    verify_cylinders,
    verify_fiber_dilation,
    verify_quasi_invariance,
    verify_self_similarity,
    verify_semistable,
)

SEED = 42
WORKERS = 2

# pre-registered rigidity thresholds (see module docstring)
ORACLE = {
    "rho_sig_dec_min": 26,
    "cq_sig_dec_min": 17,
    "cp_sig_dec_min": 14,
    "sig_inc_max": 1,
    "rho_plateau": 0.8918061,  # closed-form E sqrt(rn) at lags 2^k
    "cq_sizes": (150_000, 60_000),
}


def report(criterion: str, passed: bool, detail: str):
    print(f"ACCEPTANCE {criterion} {'PASS' if passed else 'FAIL'}: {detail}")
    assert passed, f"{criterion}: {detail}"


def test_c1_cocycle_exactness():
    t0 = time.perf_counter()
    res = verify_cocycle(seed=SEED, n_points=10_000, max_shift=32,
                         dual_max_shift=4096)
    cyl = verify_cylinders(max_len=12)
    elapsed = time.perf_counter() - t0
    ok = res.passed and cyl.passed and elapsed < 10.0
    report("C1-cocycle", ok,
           f"chain_log_err={res.detail['chain_log_err']:.2e} (<1e-10), "
           f"dual_log_err={res.detail['dual_log_err']:.2e} (<1e-12), "
           f"cylinders={'exact' if cyl.passed else 'MISMATCH'}, "
           f"runtime={elapsed:.1f}s (<10s)")


@pytest.mark.parametrize("alpha", [0.8, 1.5])
def test_c2_quasi_invariance(alpha):
    t0 = time.perf_counter()
    odo = verify_quasi_invariance(alpha, Odometer(2.0 / 3.0),
                                  n_samples=1_000_000, seed=SEED)
    bern = verify_quasi_invariance(alpha, BernoulliShift(),
                                   n_samples=1_000_000, seed=SEED)
    elapsed = time.perf_counter() - t0
    ok = odo.passed and bern.passed and elapsed < 60.0
    report(f"C2-quasi-invariance[alpha={alpha}]", ok,
           f"5 functionals within 4 SE on both bases at N=1e6, "
           f"runtime={elapsed:.1f}s (<60s)")


def test_c3_self_similarity():
    fiber = verify_fiber_dilation(tol=1e-12)
    cfg_o = StableConfig(1.2, Odometer(2.0 / 3.0), point_budget=10**13)
    cfg_b = StableConfig(1.5, BernoulliShift(), point_budget=10**13)
    res_o = verify_self_similarity(cfg_o, cs=(0.5, 2.0, math.e), eps=1e-4,
                                   n_samples=1_000_000, seed=SEED)
    res_b = verify_self_similarity(cfg_b, cs=(0.5, 2.0, math.e), eps=1e-4,
                                   n_samples=1_000_000, seed=SEED + 1)
    ok = fiber.passed and res_o.passed and res_b.passed
    report("C3-self-similarity", ok,
           f"exact fiber rel err={fiber.detail['max_rel_err']:.2e} (<1e-12); "
           f"MC within 4 SE for c in (0.5, 2, e) at N=1e6 on both bases")


MARGINAL_CASES = [(a, kind) for a in (0.8, 1.0, 1.5)
                  for kind in ("bernoulli", "odometer")]
RUNTIME_BUDGET = 300.0  # "< 5 min per alpha" read per configuration run


def _marginal_cfg(alpha, kind):
    system = BernoulliShift() if kind == "bernoulli" else Odometer(2.0 / 3.0)
    return StableConfig(alpha, system, symmetric=True, point_budget=10**13)


@pytest.mark.parametrize("alpha,kind", MARGINAL_CASES)
def test_c4_stable_marginals(alpha, kind):
    eps, n_paths = 1e-4, 1_000_000
    cfg = _marginal_cfg(alpha, kind)
    total = expected_points(cfg, eps, n_paths)
    # calibrate this machine on ~2e7 points of the same code path
    calib_paths = max(2000, int(2e7 / (total / n_paths)))
    marginal_samples(cfg, 1e-2, 64, seed=SEED, workers=WORKERS)  # warm jit
    t0 = time.perf_counter()
    marginal_samples(cfg, eps, calib_paths, seed=SEED + 1, workers=WORKERS)
    rate = expected_points(cfg, eps, calib_paths) / (time.perf_counter() - t0)
    projected = total / rate
    if projected > RUNTIME_BUDGET * 1.15:
        report(f"C4-marginals[alpha={alpha},{kind}]", False,
               f"infeasible at stated scale: {total:.3g} Poisson points "
               f"needed (N=1e6 paths x {total / n_paths:.3g} points/path at "
               f"eps=1e-4), measured throughput {rate/1e6:.1f}M points/s "
               f"with {WORKERS} workers -> projected {projected/60:.1f} min "
               f"> 5 min budget; the construction itself is validated at "
               f"reduced scale in test_c4_reduced_scale")
    t0 = time.perf_counter()
    xs = marginal_samples(cfg, eps, n_paths, seed=SEED, workers=WORKERS)
    elapsed = time.perf_counter() - t0
    ks = sum_stability_test(xs, alpha, level=0.01)
    hill = hill_tail_index(xs, top_fraction=0.01)
    ok = ks.passed and abs(hill.value - alpha) < 0.1 and elapsed < RUNTIME_BUDGET
    report(f"C4-marginals[alpha={alpha},{kind}]", ok,
           f"sum-stability KS p={ks.pvalue:.3f} (>0.01), "
           f"hill={hill.value:.3f}+-{hill.se:.3f} (target {alpha}+-0.1), "
           f"N=1e6, eps=1e-4, runtime={elapsed:.0f}s (<300s)")


@pytest.mark.parametrize("alpha,kind", MARGINAL_CASES)
def test_c4_reduced_scale(alpha, kind):
    """Same statistics at a feasible scale for every configuration.

    Not a substitute for the stated-scale criterion: this pins the
    correctness of the construction wherever the full-scale run is
    infeasible on this hardware.
    """
    eps, n_paths = 3e-3, 120_000
    cfg = _marginal_cfg(alpha, kind)
    xs = marginal_samples(cfg, eps, n_paths, seed=SEED, workers=WORKERS)
    ks = sum_stability_test(xs, alpha, level=0.01)
    hill = hill_tail_index(xs, top_fraction=0.01)
    ok = ks.passed and abs(hill.value - alpha) < 4 * hill.se + 0.1
    report(f"C4r-marginals-reduced[alpha={alpha},{kind}]", ok,
           f"KS p={ks.pvalue:.3f}, hill={hill.value:.3f}+-{hill.se:.3f}, "
           f"N={n_paths}, eps={eps}")


def test_c5_levy_khinchine_consistency():
    cfg = StableConfig(1.5, BernoulliShift(), point_budget=10**13)
    t0 = time.perf_counter()
    single = cf_consistency(cfg, {0: 1.0}, eps=1e-2, n_paths=1_000_000,
                            lk_samples=1_000_000, seed=SEED, workers=WORKERS)
    double = cf_consistency(cfg, {0: 1.0, 1: -0.5}, eps=1e-2,
                            n_paths=1_000_000, lk_samples=1_000_000,
                            seed=SEED + 1, workers=WORKERS)
    elapsed = time.perf_counter() - t0
    ok = single.sup_gap < 0.01 and double.sup_gap < 0.01
    report("C5-lk-consistency", ok,
           f"sup gap single-lag={single.sup_gap:.4f}, "
           f"two-lag={double.sup_gap:.4f} (<0.01) at N=1e6, "
           f"runtime={elapsed:.0f}s")


def _mixing_family():
    def fs(name, fn, span=0, sup=1.0):
        return FSpec(name, lambda pt: None, fn, sup=sup, span=span)

    return [
        fs("coord-centered", lambda b: b.column(0) - 0.5),
        fs("sin-coord", lambda b: np.sin(2 * np.pi * b.column(0))),
        fs("cos-coord", lambda b: np.cos(2 * np.pi * b.column(0))),
        fs("pair-product", lambda b: (b.column(0) - 0.5) * (b.column(1) - 0.5),
           span=1, sup=0.25),
        fs("tail-indicator", lambda b: (b.column(0) < 1.0 / 3.0) - 1.0 / 3.0),
    ]


def test_c6_mixing_criterion():
    sh = BernoulliShift()
    worst = 0.0
    bad = []
    for fi, f in enumerate(_mixing_family()):
        for n in range(1, 65):
            est = koopman_correlation(sh, f, n, n_samples=100_000,
                                      seed=SEED, block=1000 * fi + n)
            if est.se > 0 and abs(est.value) > 4 * est.se:
                bad.append((f.name, n, est.value, est.se))
            if est.se > 0:
                worst = max(worst, abs(est.value) / est.se)
    report("C6-mixing", not bad,
           f"5 centered functions x lags 1..64 within 4 SE of 0 "
           f"(max |z|={worst:.2f}); violations={bad if bad else 'none'}")


def test_c7_rigidity_along_pow2():
    lags = [2**k for k in range(2, 15)]
    series = rigidity_scan(Odometer(2.0 / 3.0), "binary_fraction", lags,
                           n_samples=1_000_000, seed=SEED)
    gap = 1.0 - series.estimates
    t_rho = monotone_trend(gap, series.ses, z=3.0)
    final_ok = abs(series.estimates[-1] - ORACLE["rho_plateau"]) < \
        4 * series.ses[-1] + 1e-3
    rho_verdict = (t_rho.significant_increases <= ORACLE["sig_inc_max"]
                   and t_rho.significant_decreases >= ORACLE["rho_sig_dec_min"]
                   and final_ok)

    cfg = StableConfig(1.0, Odometer(2.0 / 3.0), symmetric=True,
                       point_budget=10**13)
    n_mc, n_paths = ORACLE["cq_sizes"]
    cq_est, cq_se, cp_est, cp_se = [], [], [], []
    for k in range(2, 15):
        q, p = idp_rigidity_correlation(cfg, {0: 0.5}, 2**k, eps=1e-2,
                                        n_mc=n_mc, n_paths=n_paths,
                                        seed=SEED, workers=WORKERS)
        cq_est.append(q.value.real)
        cq_se.append(q.se)
        cp_est.append(p.value.real)
        cp_se.append(p.se)
    t_cq = monotone_trend(-np.array(cq_est), np.array(cq_se), z=3.0)
    t_cp = monotone_trend(-np.array(cp_est), np.array(cp_se), z=3.0)
    cq_verdict = (t_cq.significant_increases <= ORACLE["sig_inc_max"]
                  and t_cq.significant_decreases >= ORACLE["cq_sig_dec_min"])
    cp_verdict = (t_cp.significant_increases <= ORACLE["sig_inc_max"]
                  and t_cp.significant_decreases >= ORACLE["cp_sig_dec_min"])
    ok = rho_verdict and cq_verdict and cp_verdict
    report("C7-rigidity", ok,
           f"1-rho(2^k) decreasing: {t_rho.significant_decreases} sig pairs "
           f"(>= {ORACLE['rho_sig_dec_min']}), {t_rho.significant_increases} "
           f"counter; rho(2^14)={series.estimates[-1]:.5f} vs closed form "
           f"{ORACLE['rho_plateau']:.5f}; sequence-measure trend "
           f"{t_cq.significant_decreases}>={ORACLE['cq_sig_dec_min']}, "
           f"process trend {t_cp.significant_decreases}>="
           f"{ORACLE['cp_sig_dec_min']}: verdicts "
           f"{'agree' if rho_verdict == cq_verdict == cp_verdict else 'DISAGREE'}")


def test_c8_semistable_consistency():
    res = verify_semistable(alpha=1.0, p=2.0 / 3.0, n_samples=100_000,
                            seed=SEED)
    report("C8-semistable", res.passed,
           f"atom dilation rel err={res.detail['atom_dilation_rel_err']:.2e} "
           f"(<1e-12), randomized-vs-continuous KS "
           f"p={res.detail['randomized_ks_p']:.3f} (>0.01) at N=1e5, "
           f"band embedding err={res.detail['embedding_err']:.2e}")


def test_c9_determinism(tmp_path):
    from maharam.cli import main as cli_main

    args = ["simulate", "--system", "odometer", "--alpha", "1.1", "--eps",
            "0.01", "--window=-2:2", "--paths", "200", "--seed", "9"]
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    assert cli_main(args + ["--workers", "1", "--out", str(a)]) == 0
    assert cli_main(args + ["--workers", "1", "--out", str(b)]) == 0
    assert cli_main(args + ["--workers", "2", "--out", str(c)]) == 0
    same_seed = a.read_bytes() == b.read_bytes()
    across_workers = a.read_bytes() == c.read_bytes()

    cfg = StableConfig(1.2, Odometer(2.0 / 3.0), point_budget=10**9)
    x1 = marginal_samples(cfg, 1e-3, 5000, seed=SEED, workers=1)
    x2 = marginal_samples(cfg, 1e-3, 5000, seed=SEED, workers=2)
    arrays_equal = bool(np.array_equal(x1, x2))
    ok = same_seed and across_workers and arrays_equal
    report("C9-determinism", ok,
           f"same-seed bytes identical={same_seed}, across workers "
           f"identical={across_workers}, estimator arrays equal={arrays_equal}")
