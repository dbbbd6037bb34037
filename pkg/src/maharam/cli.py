"""Command-line entry point: simulate, diagnose, verify.

Every run is reproducible from (config, seed, workers); each output file
gets a JSON sidecar carrying the fully resolved configuration plus a schema
version.  Exit codes: 0 success, 1 verification failure, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .diagnostics import (cf_consistency, hill_tail_index, koopman_correlation,
                          rigidity_scan, sum_stability_test)
from .levy import StableConfig
from .simulate import PointBudgetExceeded, marginal_samples, simulate_paths
from .systems import make_system
from . import verify as verifymod

SCHEMA = {
    "paths": "paths-v1",       # path_id,n,value
    "series": "series-v1",     # lag,estimate,se
    "cf": "cf-v1",             # theta,re,im,se
    "tails": "tails-v1",       # stat,value,detail
}


def _system_args(sp):
    sp.add_argument("--system", choices=("odometer", "bernoulli", "translation"),
                    default="odometer")
    sp.add_argument("--p", type=float, default=2.0 / 3.0,
                    help="odometer bias, in (1/2, 1)")
    sp.add_argument("--marginal", default="uniform",
                    help="bernoulli coordinate marginal")
    sp.add_argument("--f", default=None, help="named spectral function")
    sp.add_argument("--xi", default=None, help="named sign cocycle")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--config", default=None,
                    help="JSON file of defaults; explicit flags override")


def _build_system(ns):
    if ns.system == "odometer":
        return make_system("odometer", p=ns.p)
    if ns.system == "bernoulli":
        return make_system("bernoulli", marginal=ns.marginal)
    return make_system("translation")


def _build_config(ns, window=(0, 0)):
    return StableConfig(
        alpha=ns.alpha,
        system=_build_system(ns),
        f=ns.f,
        xi=ns.xi,
        symmetric=not getattr(ns, "asymmetric", False),
        window=window,
        point_budget=getattr(ns, "budget", 10_000_000),
    )


def _parse_window(text):
    lo, _, hi = text.partition(":")
    return int(lo), int(hi)


def _parse_coeffs(text):
    out = {}
    for part in text.split(","):
        lag, _, coef = part.partition(":")
        out[int(lag)] = float(coef)
    return out


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def _write_meta(out_path, schema, ns, extra=None):
    meta = {
        "schema": schema,
        "version": __version__,
        "config": {k: v for k, v in sorted(vars(ns).items())
                   if k not in ("func",) and v is not None},
    }
    if extra:
        meta.update(extra)
    with open(str(out_path) + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _apply_config_file(ns, argv):
    if not getattr(ns, "config", None):
        return ns
    with open(ns.config) as fh:
        defaults = json.load(fh)
    for key, value in defaults.items():
        flag = "--" + key.replace("_", "-")
        explicit = any(tok == flag or tok.startswith(flag + "=")
                       for tok in argv)
        if not explicit and hasattr(ns, key):
            setattr(ns, key, value)
    return ns


# -- subcommands -----------------------------------------------------------------


def cmd_simulate(ns):
    window = _parse_window(ns.window)
    cfg = _build_config(ns, window)
    batch = simulate_paths(cfg, ns.eps, ns.paths, window=window,
                           seed=ns.seed, workers=ns.workers)
    lags = range(window[0], window[1] + 1)
    rows = ((pid, lag, float(batch.values[pid, j]))
            for pid in range(ns.paths) for j, lag in enumerate(lags))
    _write_csv(ns.out, "path_id,n,value", rows)
    _write_meta(ns.out, SCHEMA["paths"], ns, {
        "rows": ns.paths * (window[1] - window[0] + 1),
        "mean_point_count": float(batch.point_counts.mean()),
    })
    return 0


def cmd_correlate(ns):
    sys_ = _build_system(ns)
    f = ns.f or {"odometer": "binary_fraction", "bernoulli": "coord0_centered",
                 "translation": "gauss_bump"}[ns.system]
    lo, hi = _parse_window(ns.lags)
    rows = []
    for i, lag in enumerate(range(lo, hi + 1)):
        est = koopman_correlation(sys_, f, lag, ns.samples, seed=ns.seed, block=i)
        rows.append((lag, est.value, est.se))
    _write_csv(ns.out, "lag,estimate,se", rows)
    _write_meta(ns.out, SCHEMA["series"], ns, {"f": f, "rows": len(rows)})
    return 0


def cmd_rigidity(ns):
    sys_ = _build_system(ns)
    f = ns.f or ("binary_fraction" if ns.system == "odometer" else "coord0")
    if ns.sequence != "pow2":
        raise SystemExit(2)
    lags = [2 ** k for k in range(2, ns.kmax + 1)]
    series = rigidity_scan(sys_, f, lags, ns.samples, seed=ns.seed)
    _write_csv(ns.out, "lag,estimate,se",
               [(int(l), float(e), float(s)) for l, e, s in series.rows()])
    _write_meta(ns.out, SCHEMA["series"], ns, {"f": f, "rows": len(lags)})
    return 0


def cmd_cf(ns):
    cfg = _build_config(ns)
    coeffs = _parse_coeffs(ns.a)
    thetas = np.linspace(-ns.theta_max, ns.theta_max, ns.theta_points)
    res = cf_consistency(cfg, coeffs, ns.eps, ns.paths, thetas=thetas,
                         lk_samples=ns.lk_samples, seed=ns.seed,
                         workers=ns.workers)
    rows = [(float(th), float(v.real), float(v.imag), float(se))
            for th, v, se in zip(res.thetas, res.empirical.values,
                                 res.empirical.ses)]
    _write_csv(ns.out, "theta,re,im,se", rows)
    _write_meta(ns.out, SCHEMA["cf"], ns, {
        "sup_gap": res.sup_gap,
        "max_combined_se": float(np.max(res.combined_se)),
    })
    return 0


def cmd_tails(ns):
    cfg = _build_config(ns)
    xs = marginal_samples(cfg, ns.eps, ns.paths, seed=ns.seed, workers=ns.workers)
    hill = hill_tail_index(xs, ns.top_fraction)
    ks = sum_stability_test(xs, ns.alpha)
    rows = [("hill_alpha", hill.value, hill.se),
            ("hill_target", ns.alpha, 0.0),
            ("sum_stability_ks", ks.statistic, ks.pvalue),
            ("sum_stability_pass", float(ks.passed), 0.0)]
    _write_csv(ns.out, "stat,value,detail", rows)
    _write_meta(ns.out, SCHEMA["tails"], ns, {"samples": len(xs)})
    return 0


def cmd_verify(ns):
    checks = []
    if ns.check in ("cocycle", "all"):
        checks.append(verifymod.verify_cocycle(seed=ns.seed, p=ns.p))
    if ns.check in ("cylinders", "all"):
        checks.append(verifymod.verify_cylinders())
    if ns.check in ("quasi-invariance", "all"):
        checks.append(verifymod.verify_quasi_invariance(
            ns.alpha, _build_system(ns), n_samples=ns.N, seed=ns.seed))
    if ns.check in ("self-similarity", "all"):
        cfg = _build_config(ns)
        checks.append(verifymod.verify_self_similarity(
            cfg, cs=(ns.c,), eps=ns.eps, n_samples=ns.N, seed=ns.seed))
    if ns.check in ("semistable", "all"):
        checks.append(verifymod.verify_semistable(alpha=ns.alpha, p=ns.p,
                                                  seed=ns.seed))
    for res in checks:
        print(res.line())
    return 0 if all(r.passed for r in checks) else 1


def build_parser():
    ap = argparse.ArgumentParser(prog="maharam",
                                 description="stable processes from nonsingular "
                                             "dynamics: simulate, diagnose, verify")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="simulate stationary path windows")
    _system_args(sp)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--eps", type=float, default=1e-4)
    sp.add_argument("--window", default="0:0", help="inclusive lag range n1:n2")
    sp.add_argument("--paths", type=int, default=1000)
    sp.add_argument("--budget", type=int, default=10_000_000)
    sp.add_argument("--asymmetric", action="store_true")
    sp.add_argument("--out", default="paths.csv")
    sp.set_defaults(func=cmd_simulate)

    dg = sub.add_parser("diagnose", help="ergodic and distributional diagnostics")
    dsub = dg.add_subparsers(dest="diagnostic", required=True)

    sp = dsub.add_parser("correlate", help="derivative-weighted correlations")
    _system_args(sp)
    sp.add_argument("--lags", default="1:64")
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--out", default="correlations.csv")
    sp.set_defaults(func=cmd_correlate)

    sp = dsub.add_parser("rigidity", help="correlation scan along a lag sequence")
    _system_args(sp)
    sp.add_argument("--sequence", default="pow2")
    sp.add_argument("--kmax", type=int, default=14)
    sp.add_argument("--samples", type=int, default=200_000)
    sp.add_argument("--out", default="rigidity.csv")
    sp.set_defaults(func=cmd_rigidity)

    sp = dsub.add_parser("cf", help="characteristic-function consistency grid")
    _system_args(sp)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--eps", type=float, default=1e-2)
    sp.add_argument("--paths", type=int, default=100_000)
    sp.add_argument("--a", default="0:1.0", help="lag:coef[,lag:coef...]")
    sp.add_argument("--theta-max", dest="theta_max", type=float, default=5.0)
    sp.add_argument("--theta-points", dest="theta_points", type=int, default=21)
    sp.add_argument("--lk-samples", dest="lk_samples", type=int, default=200_000)
    sp.add_argument("--budget", type=int, default=10_000_000)
    sp.add_argument("--asymmetric", action="store_true")
    sp.add_argument("--out", default="cf.csv")
    sp.set_defaults(func=cmd_cf)

    sp = dsub.add_parser("tails", help="tail index and sum-stability of marginals")
    _system_args(sp)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--eps", type=float, default=1e-3)
    sp.add_argument("--paths", type=int, default=100_000)
    sp.add_argument("--top-fraction", dest="top_fraction", type=float, default=0.01)
    sp.add_argument("--budget", type=int, default=10_000_000)
    sp.add_argument("--asymmetric", action="store_true")
    sp.add_argument("--out", default="tails.csv")
    sp.set_defaults(func=cmd_tails)

    sp = sub.add_parser("verify", help="run invariant suites")
    sp.add_argument("check", choices=("cocycle", "cylinders", "quasi-invariance",
                                      "self-similarity", "semistable", "all"))
    _system_args(sp)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--eps", type=float, default=1e-4)
    sp.add_argument("--N", type=int, default=200_000)
    sp.add_argument("--c", type=float, default=2.0)
    sp.add_argument("--budget", type=int, default=10_000_000)
    sp.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    ns = _apply_config_file(ns, ap)
    try:
        return ns.func(ns)
    except PointBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
