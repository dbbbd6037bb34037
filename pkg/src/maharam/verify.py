"""Invariant suites shared by the command line and the acceptance tests.

Each check returns a VerifyResult with the measured quantity and the
tolerance it was held to, so callers can print one line per invariant and
exit nonzero on failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from . import rng as rngmod
from .extension import fiber_mass, pareto_interval_mass, pareto_sample, \
    discrete_embedding_mass, sample_span_factor, span_normalizer
from .levy import StableConfig, abs_band, scaling_check, semistable_span
from .systems import BernoulliShift, Odometer


@dataclass
class VerifyResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        parts = ", ".join(f"{k}={_fmt(v)}" for k, v in self.detail.items())
        return f"{status} {self.name}: {parts}"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


# -- cocycle exactness ---------------------------------------------------------


def verify_cocycle(seed: int = 0, n_points: int = 10_000, max_shift: int = 32,
                   dual_max_shift: int = 4096, p: float = 2.0 / 3.0) -> VerifyResult:
    """Chain rule of the iterated derivative and dual derivative computation.

    Both are exact integer identities for the odometer; the reported errors
    are in log domain.
    """
    od = Odometer(p)
    g = rngmod.substream(seed, "diagnostics", 11)
    pts = od.sample_batch(g, n_points)
    n = g.integers(-max_shift, max_shift + 1, n_points)
    m = g.integers(-max_shift, max_shift + 1, n_points)
    max_err = 0
    # w_{n+m}(x) = w_n(x) * w_m(T^n x), exponent form
    for nv in np.unique(n):
        rows = np.where(n == nv)[0]
        sub = _take(pts, rows)
        e_n = od.batch_rn_exponent(sub, int(nv))
        shifted = od.batch_apply(sub, int(nv))
        for mv in np.unique(m[rows]):
            rr = np.where(m[rows] == mv)[0]
            e_nm = od.batch_rn_exponent(_take(sub, rr), int(nv) + int(mv))
            e_m = od.batch_rn_exponent(_take(shifted, rr), int(mv))
            err = int(np.max(np.abs(e_nm - (e_n[rr] + e_m))))
            max_err = max(max_err, err)
    chain_log_err = max_err * abs(od.log_lam)

    g2 = rngmod.substream(seed, "diagnostics", 12)
    pts2 = od.sample_batch(g2, 256)
    dual_err = 0
    for mm in [1, -1, 2, -2, 3, 7, 64, 65, -64, 1023, 2048, dual_max_shift,
               -dual_max_shift]:
        e_bits = od.batch_rn_exponent(pts2, mm, method="bits")
        e_steps = od.batch_rn_exponent(pts2, mm, method="steps")
        dual_err = max(dual_err, int(np.max(np.abs(e_bits - e_steps))))
    dual_log_err = dual_err * abs(od.log_lam)

    passed = chain_log_err < 1e-10 and dual_log_err < 1e-12
    return VerifyResult("cocycle", passed, {
        "chain_log_err": chain_log_err,
        "dual_log_err": dual_log_err,
        "points": n_points,
    })


def _take(pts, rows):
    from .systems import PackedDyadic
    return PackedDyadic(pts.lo[rows], pts.hi[rows])


# -- cylinder-exact quasi-invariance ------------------------------------------


def verify_cylinders(max_len: int = 12, p_num: int = 2, p_den: int = 3) -> VerifyResult:
    """mu(translated cylinder) = integral of the derivative, in exact rationals.

    Mixed cylinders map to single cylinders with constant derivative; the
    all-ones cylinder needs the geometric tail, summed in closed form.
    """
    p = Fraction(p_num, p_den)
    lam = (1 - p) / p
    worst = None
    for length in range(1, max_len + 1):
        for bits in product((0, 1), repeat=length):
            mass = _cyl_mass(bits, p)
            if all(b == 1 for b in bits):
                image_mass = (1 - p) ** length
                rn_integral = image_mass  # closed-form geometric sum
            else:
                j = bits.index(0) + 1  # first zero, 1-based
                image = (0,) * (j - 1) + (1,) + bits[j:]
                image_mass = _cyl_mass(image, p)
                rn_integral = lam ** (j - 2) * mass
            if image_mass != rn_integral:
                worst = (bits, image_mass, rn_integral)
    return VerifyResult("cylinder-quasi-invariance", worst is None, {
        "max_len": max_len,
        "mismatch": worst if worst else "none",
    })


def _cyl_mass(bits, p: Fraction) -> Fraction:
    out = Fraction(1)
    for b in bits:
        out *= p if b else (1 - p)
    return out


# -- extension invariance (Monte Carlo) -----------------------------------------


def _invariance_functionals(system):
    """Five bounded product functionals g(point) * h(fiber) for the MC test."""
    def band(a, b):
        return lambda t: ((t > a) & (t <= b)).astype(float)

    def ramp(a, b):
        return lambda t: np.clip((t - a) / (b - a), 0.0, 1.0) * (t <= b)

    hs = [("band(0.5,2)", 0.5, band(0.5, 2.0)),
          ("band(1,4)", 1.0, band(1.0, 4.0)),
          ("ramp(0.5,3)", 0.5, ramp(0.5, 3.0)),
          ("band(0.8,1.6)", 0.8, band(0.8, 1.6)),
          ("band(2,8)", 2.0, band(2.0, 8.0))]
    if isinstance(system, Odometer):
        gs = [system.spectral_function("one"),
              system.spectral_function("first_bit"),
              system.spectral_function("binary_fraction"),
              system.spectral_function("one"),
              system.spectral_function("first_bit")]
    else:
        gs = [system.spectral_function(n) for n in
              ("one", "coord0", "coord0", "one", "coord0")]
    return [(f"{g.name}*{hn}", g, a, h) for (hn, a, h), g in zip(hs, gs)]


def verify_quasi_invariance(alpha: float, system=None, n_samples: int = 1_000_000,
                            seed: int = 0, z: float = 4.0) -> VerifyResult:
    """Invariance of (base law) x t^(-1-alpha) dt under the extension map.

    Importance-weighted difference estimate of int F o T~ - int F for five
    bounded functionals; each must sit within z standard errors of zero.
    The sampling floor covers the support of both integrands (one forward
    step can shrink the fiber by at most lambda^(1/alpha) on the odometer).
    """
    if system is None:
        system = Odometer(2.0 / 3.0)
    results = {}
    passed = True
    if isinstance(system, Odometer):
        shrink = system.lam ** (1.0 / alpha)
        step_exp = system.batch_step_exponent
        log_lam = system.log_lam
    else:
        shrink = 1.0
        step_exp = None
        log_lam = 0.0
    for i, (label, gf, floor_a, h) in enumerate(_invariance_functionals(system)):
        g_base = rngmod.substream(seed, "base_points", 100 + i)
        g_fib = rngmod.substream(seed, "fiber", 100 + i)
        eps0 = floor_a * shrink * 0.999
        batch = system.sample_batch(g_base, n_samples, offsets=(0, 1))
        t = pareto_sample(eps0, alpha, g_fib, n_samples)
        mass = fiber_mass(eps0, alpha)
        f_here = gf.batch(batch) * h(t)
        shifted = system.batch_apply(batch, 1)
        if step_exp is not None:
            t_next = t * np.exp(step_exp(batch) * log_lam / alpha)
        else:
            t_next = t
        f_next = gf.batch(shifted) * h(t_next)
        diff = f_next - f_here
        est = mass * float(np.mean(diff))
        se = mass * float(np.std(diff) / math.sqrt(n_samples))
        ok = abs(est) <= z * se or (est == 0.0 and se == 0.0)
        results[label] = (est, se)
        passed = passed and ok
    detail = {k: f"{v[0]:.4g}+-{v[1]:.3g}" for k, v in results.items()}
    detail["N"] = n_samples
    detail["alpha"] = alpha
    return VerifyResult("quasi-invariance", passed, detail)


# -- self-similarity -------------------------------------------------------------


def verify_fiber_dilation(tol: float = 1e-12) -> VerifyResult:
    """Exact rectangle identity: fiber mass of c*(a,b) = c^-alpha * mass(a,b)."""
    worst = 0.0
    for alpha in (0.8, 1.0, 1.5):
        for c in (0.5, 2.0, math.e):
            for (a, b) in ((0.2, 1.0), (1.0, 3.0), (0.05, 40.0)):
                lhs = pareto_interval_mass(c * a, c * b, alpha)
                rhs = c ** (-alpha) * pareto_interval_mass(a, b, alpha)
                worst = max(worst, abs(lhs - rhs) / rhs)
    return VerifyResult("fiber-dilation-exact", worst < tol,
                        {"max_rel_err": worst, "tol": tol})


def verify_self_similarity(cfg: StableConfig, cs=(0.5, 2.0, math.e),
                           eps: float = 1e-4, n_samples: int = 1_000_000,
                           seed: int = 0, z: float = 4.0) -> VerifyResult:
    """Monte-Carlo functional form of the dilation law on the realized measure."""
    fiber = verify_fiber_dilation()
    passed = fiber.passed
    detail = {"fiber_rel_err": fiber.detail["max_rel_err"]}
    func = abs_band(1.0, 3.0)
    for c in cs:
        lhs, rhs, se = scaling_check(cfg, c, func, eps, n_samples, seed=seed)
        ok = abs(lhs - rhs) <= z * se
        detail[f"c={c:.3g}"] = f"lhs={lhs:.4g} rhs={rhs:.4g} se={se:.2g}"
        passed = passed and ok
    return VerifyResult("self-similarity", passed, detail)


# -- semi-stable lane ------------------------------------------------------------


def verify_semistable(alpha: float = 1.0, p: float = 2.0 / 3.0,
                      n_samples: int = 100_000, seed: int = 0,
                      ks_level: float = 0.01) -> VerifyResult:
    """Atom-mass dilation exactness and the randomized-fiber law.

    Dilating by the span multiplies every atom mass by span^-alpha exactly;
    lifting a unit atom by the [1, span) factor reproduces the continuous
    power-law fiber restricted to that band (two-sample KS).
    """
    from scipy import stats as sps

    cfg = StableConfig(alpha, Odometer(p), symmetric=True)
    b = semistable_span(cfg)
    worst = 0.0
    for k in range(-12, 13):
        g = b ** float(k)
        lhs = (b * g) ** (-alpha)
        rhs = b ** (-alpha) * g ** (-alpha)
        worst = max(worst, abs(lhs - rhs) / rhs)
    beta = span_normalizer(alpha, b)
    beta_closed = (1.0 - b ** (-alpha)) / alpha
    beta_err = abs(beta - beta_closed)

    g1 = rngmod.substream(seed, "fiber", 41)
    g2 = rngmod.substream(seed, "fiber", 42)
    u = sample_span_factor(alpha, b, g1, n_samples)
    cont = pareto_sample(1.0, alpha, g2, 4 * n_samples)
    cont = cont[cont < b][:n_samples]
    stat, pval = sps.ks_2samp(u, cont)
    emb_err = 0.0
    for (a, c) in ((0.3, 2.0), (1.0, 7.0), (0.05, 0.4)):
        emb = discrete_embedding_mass(a, c, alpha, b)
        emb_err = max(emb_err, abs(emb - pareto_interval_mass(a, c, alpha)))
    passed = worst < 1e-12 and beta_err < 1e-15 and pval > ks_level and emb_err < 1e-8
    return VerifyResult("semistable", passed, {
        "atom_dilation_rel_err": worst,
        "beta_err": beta_err,
        "randomized_ks_p": pval,
        "embedding_err": emb_err,
        "span": b,
    })
