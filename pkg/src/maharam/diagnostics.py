"""Ergodic and distributional diagnostics for the built-in systems.

Correlation estimators use the derivative-weighted isometry

    (U g)(w) = sqrt(rn(w)) g(T w),

whose correlations vanish iff the driven process mixes and return to the
lag-0 value along a subsequence iff it is rigid.  "Tends to" claims are
never asserted against invented constants: ``monotone_trend`` reports
noise-aware pairwise orderings plus a Mann-Kendall statistic, and the
acceptance suite pins its thresholds from a recorded oracle run.

The square root of the cocycle is always formed in log domain, so scans at
lags like 2^14 cannot overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats as sps

from . import rng as rngmod
from .levy import StableConfig, levy_integral_constant, orbit_values_batch


@dataclass
class Estimate:
    value: float
    se: float

    def __iter__(self):
        return iter((self.value, self.se))


@dataclass
class ComplexEstimate:
    value: complex
    se: float


@dataclass
class CorrelationSeries:
    lags: np.ndarray
    estimates: np.ndarray
    ses: np.ndarray
    f_name: str = ""
    samples: int = 0

    def rows(self):
        return zip(self.lags, self.estimates, self.ses)


@dataclass
class CFGrid:
    thetas: np.ndarray
    values: np.ndarray  # complex
    ses: np.ndarray


@dataclass
class TrendResult:
    """Noise-aware monotonicity summary of an estimate sequence."""

    n_pairs: int
    significant_decreases: int
    significant_increases: int
    mann_kendall: int  # +1 per decreasing pair, -1 per increasing pair


def _correlation_offsets(f, n: int):
    span = getattr(f, "span", 0)
    return tuple(range(0, span + 1)) + tuple(range(n, n + span + 1))


def koopman_correlation(sys, f, n: int, n_samples: int = 100_000,
                        seed: int = 0, block: int = 0) -> Estimate:
    """Monte-Carlo estimate of the lag-n derivative-weighted correlation of f."""
    g = rngmod.substream(seed, "diagnostics", block)
    if isinstance(f, str):
        f = sys.spectral_function(f)
    batch = sys.sample_batch(g, n_samples, offsets=_correlation_offsets(f, n))
    y = (np.exp(0.5 * sys.batch_log_rn(batch, n))
         * f.batch(sys.batch_apply(batch, n)) * f.batch(batch))
    return Estimate(float(np.mean(y)), float(np.std(y) / math.sqrt(n_samples)))


def zero_type_functional(sys, n: int, n_samples: int = 100_000,
                         seed: int = 0, block: int = 0) -> Estimate:
    """Estimate of the mean square-rooted n-step derivative (<= 1 by Cauchy-Schwarz)."""
    g = rngmod.substream(seed, "diagnostics", block)
    batch = sys.sample_batch(g, n_samples, offsets=(0, n))
    y = np.exp(0.5 * sys.batch_log_rn(batch, n))
    return Estimate(float(np.mean(y)), float(np.std(y) / math.sqrt(n_samples)))


def rigidity_scan(sys, f, lags: Sequence[int], n_samples: int = 100_000,
                  seed: int = 0) -> CorrelationSeries:
    """Normalized correlations rho(n_k) over an increasing lag sequence.

    Each lag gets an independent substream; the normalization uses the same
    sample, with a delta-method standard error for the ratio.
    """
    lags = list(lags)
    if any(b <= a for a, b in zip(lags, lags[1:])):
        raise ValueError("lag sequence must be strictly increasing")
    if isinstance(f, str):
        f = sys.spectral_function(f)
    est = np.zeros(len(lags))
    ses = np.zeros(len(lags))
    for j, lag in enumerate(lags):
        g = rngmod.substream(seed, "diagnostics", j + 1)
        batch = sys.sample_batch(g, n_samples,
                                 offsets=_correlation_offsets(f, lag))
        f0 = f.batch(batch)
        num = np.exp(0.5 * sys.batch_log_rn(batch, lag)) * f.batch(
            sys.batch_apply(batch, lag)) * f0
        den = f0 * f0
        mnum, mden = float(np.mean(num)), float(np.mean(den))
        rho = mnum / mden
        resid = num - rho * den
        ses[j] = float(np.std(resid) / (mden * math.sqrt(n_samples)))
        est[j] = rho
    return CorrelationSeries(np.asarray(lags), est, ses, f.name, n_samples)


def monotone_trend(estimates: np.ndarray, ses: np.ndarray,
                   z: float = 2.0) -> TrendResult:
    """Pairwise orderings of a sequence, counted only beyond combined noise."""
    x = np.asarray(estimates, dtype=float)
    s = np.asarray(ses, dtype=float)
    n = len(x)
    dec = inc = mk = 0
    pairs = 0
    for i in range(n):
        for j in range(i + 1, n):
            pairs += 1
            d = x[i] - x[j]
            sd = math.hypot(s[i], s[j])
            if d > 0:
                mk += 1
            elif d < 0:
                mk -= 1
            if d > z * sd:
                dec += 1
            elif d < -z * sd:
                inc += 1
    return TrendResult(pairs, dec, inc, mk)


# -- Levy-Khinchine lane -------------------------------------------------------


def _importance_fiber(alpha: float, eps: float, rng: np.random.Generator, n: int):
    """Draw t on (eps, inf) from density prop. to (t^2 min 1) t^(-1-alpha).

    Returns (t, normalizer); the weight against t^(-1-alpha) dt is
    normalizer / (t^2 min 1).
    """
    if eps >= 1.0:
        c_low = 0.0
        c_high = eps ** (-alpha) / alpha
    else:
        c_low = (1.0 - eps ** (2.0 - alpha)) / (2.0 - alpha)
        c_high = 1.0 / alpha
    c_tot = c_low + c_high
    u = rng.random(n)
    v = rng.random(n)
    from_low = u < c_low / c_tot
    t = np.empty(n)
    if eps < 1.0:
        e = eps ** (2.0 - alpha)
        t_low = (e + v * (1.0 - e)) ** (1.0 / (2.0 - alpha))
        t[from_low] = t_low[from_low]
    lo = max(eps, 1.0)
    t_high = lo * v ** (-1.0 / alpha)
    t[~from_low] = t_high[~from_low]
    return t, c_tot


def _coeff_lags(a: dict) -> tuple[list[int], np.ndarray]:
    lags = sorted(a)
    return lags, np.array([a[k] for k in lags], dtype=float)


def lk_exponent(cfg: StableConfig, a: dict, eps: float = 1e-6,
                n_samples: int = 200_000, seed: int = 0, block: int = 0):
    """Estimate of the log characteristic function of the window sum.

    ``a`` maps lags to coefficients.  The fiber is importance sampled
    proportionally to (t^2 min 1) t^(-1-alpha) above eps, which keeps the
    O(t^2) integrand's weight bounded.  Returns (ComplexEstimate, tail)
    where ``tail`` bounds the omitted (0, eps) fiber region.
    """
    if not a:
        return ComplexEstimate(0.0 + 0.0j, 0.0), 0.0
    lags, coeffs = _coeff_lags(a)
    g_base = rngmod.substream(seed, "lk_base", block)
    g_fib = rngmod.substream(seed, "lk_fiber", block)
    t, c_tot = _importance_fiber(cfg.alpha, eps, g_fib, n_samples)
    batch = cfg.system.sample_batch(g_base, n_samples, offsets=tuple(lags))
    x = orbit_values_batch(cfg, batch, np.log(t), lags)
    y = x @ coeffs
    wgt = c_tot / np.minimum(t * t, 1.0)
    sides = 2.0 if cfg.symmetric else 1.0  # two-sided fiber doubles the mass
    if cfg.symmetric:
        vals = sides * (np.cos(y) - 1.0) * wgt
        mean = complex(np.mean(vals), 0.0)
        se = float(np.std(vals) / math.sqrt(n_samples))
    else:
        from .simulate import clip_unit
        gi = np.exp(1j * y) - 1.0 - 1j * np.sum(
            coeffs[None, :] * clip_unit(x), axis=1)
        vals = gi * wgt
        mean = complex(np.mean(vals))
        se = float(np.sqrt(np.var(vals.real) + np.var(vals.imag)) / math.sqrt(n_samples))
    # omitted-region bound: |integrand| <= (sum |a_k x_k|)^2 / 2 with t < eps
    amp = np.sum(np.abs(coeffs)[None, :] * np.abs(x), axis=1) / t
    amp_max = float(np.max(amp)) if len(amp) else 0.0
    tail = sides * 0.5 * amp_max**2 * eps ** (2.0 - cfg.alpha) / (2.0 - cfg.alpha)
    return ComplexEstimate(mean, se), tail


def empirical_cf(values: np.ndarray, thetas: np.ndarray) -> CFGrid:
    """Empirical characteristic function of a sample, exact 1 at theta = 0."""
    thetas = np.asarray(thetas, dtype=float)
    n = len(values)
    out = np.empty(len(thetas), dtype=complex)
    ses = np.empty(len(thetas))
    for j, th in enumerate(thetas):
        if th == 0.0:
            out[j] = 1.0
            ses[j] = 0.0
            continue
        z = np.exp(1j * th * values)
        out[j] = z.mean()
        ses[j] = math.sqrt(z.real.var() + z.imag.var()) / math.sqrt(n)
    return CFGrid(thetas, out, ses)


@dataclass
class CFConsistency:
    thetas: np.ndarray
    empirical: CFGrid
    predicted: np.ndarray
    predicted_se: np.ndarray
    gaps: np.ndarray
    combined_se: np.ndarray

    @property
    def sup_gap(self) -> float:
        return float(np.max(self.gaps))


def cf_consistency(cfg: StableConfig, a: dict, eps: float, n_paths: int,
                   thetas: Optional[np.ndarray] = None, lk_samples: int = 400_000,
                   seed: int = 0, workers: int = 1) -> CFConsistency:
    """Dual-estimator check: empirical CF of simulated paths against the
    exponential of the estimated log-CF, on a theta grid.

    The two estimates use disjoint substreams; both live at the same fiber
    truncation, so their difference is pure Monte-Carlo noise.
    """
    from .simulate import simulate_paths

    if thetas is None:
        thetas = np.linspace(-5.0, 5.0, 21)
    lags, coeffs = _coeff_lags(a)
    window = (min(lags + [0]), max(lags + [0]))
    batch = simulate_paths(cfg, eps, n_paths, window=window,
                           seed=seed, workers=workers)
    y = sum(c * batch.lag_column(k) for k, c in a.items())
    ecf = empirical_cf(y, thetas)
    pred = np.empty(len(thetas), dtype=complex)
    pse = np.empty(len(thetas))
    for j, th in enumerate(thetas):
        if th == 0.0:
            pred[j], pse[j] = 1.0, 0.0
            continue
        scaled = {k: th * c for k, c in a.items()}
        est, _tail = lk_exponent(cfg, scaled, eps, lk_samples, seed=seed + 1,
                                 block=j)
        pred[j] = np.exp(est.value)
        pse[j] = abs(pred[j]) * est.se
    gaps = np.abs(ecf.values - pred)
    comb = np.sqrt(ecf.ses**2 + pse**2)
    return CFConsistency(np.asarray(thetas), ecf, pred, pse, gaps, comb)


def idp_rigidity_correlation(cfg: StableConfig, a: dict, n: int, eps: float,
                             n_mc: int = 200_000, n_paths: int = 100_000,
                             seed: int = 0, workers: int = 1):
    """Lag-n correlations of the centered complex exponential, on both levels.

    Returns (C_Q, C_P): under the sigma-finite sequence measure via the
    (point, fiber) parametrization, and under the process law via simulated
    paths; the two trends must agree on a rigidity verdict.
    """
    lags, coeffs = _coeff_lags(a)
    shifted = [k + n for k in lags]
    all_lags = sorted(set(lags) | set(shifted))
    g_base = rngmod.substream(seed, "idp_base", n)
    g_fib = rngmod.substream(seed, "idp_fiber", n)
    t, c_tot = _importance_fiber(cfg.alpha, eps, g_fib, n_mc)
    batch = cfg.system.sample_batch(g_base, n_mc, offsets=tuple(all_lags))
    x = orbit_values_batch(cfg, batch, np.log(t), all_lags)
    col = {k: j for j, k in enumerate(all_lags)}
    y0 = sum(c * x[:, col[k]] for k, c in zip(lags, coeffs))
    yn = sum(c * x[:, col[k + n]] for k, c in zip(lags, coeffs))
    wgt = c_tot / np.minimum(t * t, 1.0)
    if cfg.symmetric:
        # two-sided fiber: average the +- branches and double the mass
        vals = ((np.exp(1j * yn) - 1.0) * np.conj(np.exp(1j * y0) - 1.0)
                + (np.exp(-1j * yn) - 1.0) * np.conj(np.exp(-1j * y0) - 1.0)) * wgt
    else:
        vals = (np.exp(1j * yn) - 1.0) * np.conj(np.exp(1j * y0) - 1.0) * wgt
    cq = ComplexEstimate(
        complex(np.mean(vals)),
        float(np.sqrt(np.var(vals.real) + np.var(vals.imag)) / math.sqrt(n_mc)),
    )

    from .simulate import simulate_at_indices

    paths = simulate_at_indices(cfg, eps, n_paths, all_lags, seed=seed + 1,
                                workers=workers)
    p0 = sum(c * paths[:, col[k]] for k, c in zip(lags, coeffs))
    pn = sum(c * paths[:, col[k + n]] for k, c in zip(lags, coeffs))
    e0 = np.exp(1j * p0)
    en = np.exp(1j * pn)
    prod = en * np.conj(e0)
    cov = prod.mean() - en.mean() * np.conj(e0.mean())
    se = float(np.sqrt(np.var(prod.real) + np.var(prod.imag)) / math.sqrt(n_paths))
    cp = ComplexEstimate(complex(cov), se)
    return cq, cp


# -- tail statistics -----------------------------------------------------------


def hill_tail_index(samples: np.ndarray, top_fraction: float = 0.01) -> Estimate:
    """Hill estimator of the tail exponent on the top order statistics of |X|."""
    x = np.abs(np.asarray(samples, dtype=float))
    n = len(x)
    if n < 10_000:
        raise ValueError(f"need at least 10^4 samples for a tail estimate, got {n}")
    if not 0.0 < top_fraction <= 0.05:
        raise ValueError(f"top fraction must lie in (0, 0.05], got {top_fraction}")
    k = int(n * top_fraction)
    tail = np.partition(x, n - k - 1)[n - k - 1:]
    tail = np.sort(tail)
    x_k = tail[0]
    logs = np.log(tail[1:] / x_k)
    alpha_hat = 1.0 / float(np.mean(logs))
    return Estimate(alpha_hat, alpha_hat / math.sqrt(k))


@dataclass
class KSResult:
    statistic: float
    pvalue: float
    passed: bool


def sum_stability_test(samples: np.ndarray, alpha: float,
                       level: float = 0.01) -> KSResult:
    """Defining stability property as a two-sample KS test.

    The sample is split in three independent thirds A, B, D and
    (A + B) / 2^(1/alpha) is compared against D, so the two KS inputs are
    independent.  Passing means not rejecting at the given level.
    """
    x = np.asarray(samples, dtype=float)
    n = (len(x) // 3) * 3
    if n < 300:
        raise ValueError("need at least 300 samples")
    a, b, d = x[:n].reshape(3, n // 3)
    combined = (a + b) / 2.0 ** (1.0 / alpha)
    stat, p = sps.ks_2samp(combined, d)
    return KSResult(float(stat), float(p), bool(p > level))
