"""Poisson sampling of the stable measure and compensated path integrals.

A path is the compensated sum over a Poisson cloud of (base point, fiber,
sign) triples with intensity (base law) x t^(-1-alpha) dt restricted to
fiber > eps:

    X_n = sum_i sign_i * x_n(point_i) - kappa_n(eps),

where x_n is the orbit coordinate and kappa_n the clipped first-moment
compensator over the sampled region (identically zero for symmetric
configurations).  The truncation eps is the single bias knob; halving it
must leave the empirical characteristic function inside Monte-Carlo noise.

Paths are produced in fixed-size blocks, each driven by substreams keyed on
(seed, purpose, block index), so output is bit-identical for a fixed
(config, seed) regardless of worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from . import rng as rngmod
from .extension import MaharamPoint, fiber_mass, pareto_sample
from .levy import StableConfig, signed_orbit_window, orbit_window
from .parallel import map_blocks
from .systems import BernoulliShift, GaussianTranslation, Odometer, bitreverse64

BLOCK_TARGET_POINTS = 4_000_000
MAX_BLOCK_PATHS = 4096


class PointBudgetExceeded(RuntimeError):
    """Expected Poisson cloud size exceeds the configured budget."""

    def __init__(self, expected: float, budget: int, eps_needed: float):
        self.expected = expected
        self.budget = budget
        self.eps_needed = eps_needed
        super().__init__(
            f"expected point count {expected:.3g} exceeds budget {budget:.3g}; "
            f"raise the truncation to eps >= {eps_needed:.3g} or increase the budget"
        )


def clip_unit(x):
    """The odd, bounded clipping function used in the compensated integral."""
    return np.clip(x, -1.0, 1.0)


def _draw_sign_words(g: np.random.Generator, n: int) -> np.ndarray:
    return g.integers(0, 1 << 64, size=(n + 63) // 64, dtype=np.uint64)


def _words_to_signs(words: np.ndarray, n: int) -> np.ndarray:
    bits = np.unpackbits(words.view(np.uint8), bitorder="little", count=n)
    return 1.0 - 2.0 * bits


def _draw_signs(g: np.random.Generator, n: int) -> np.ndarray:
    """n i.i.d. +-1 signs, one entropy bit each (unpacked from uint64 words)."""
    return _words_to_signs(_draw_sign_words(g, n), n)


try:  # fused per-point kernels for the marginal hot path
    from numba import njit

    @njit(cache=True)
    def _marginal_sums_odometer(u_t, sign_words, entropy, combo, counts,
                                eps, ni_alpha):  # pragma: no cover
        paths = counts.shape[0]
        out = np.zeros(paths)
        mask16 = np.uint64(0xFFFF)
        m1 = np.uint64(0x5555)
        m2 = np.uint64(0x3333)
        m4 = np.uint64(0x0F0F)
        one = np.uint64(1)
        k = 0
        for p in range(paths):
            s = 0.0
            for _ in range(counts[p]):
                t = eps * u_t[k] ** ni_alpha
                acc = np.uint64(0)
                for b in range(4):
                    r = entropy[k, b]
                    idx = r & mask16
                    c = combo[np.int64(idx)]
                    if (r >> np.uint64(16)) < (c >> np.uint64(16)):
                        blk = idx
                    else:
                        blk = c & mask16
                    x = ((blk & m1) << one) | ((blk >> one) & m1)
                    x = ((x & m2) << np.uint64(2)) | ((x >> np.uint64(2)) & m2)
                    x = ((x & m4) << np.uint64(4)) | ((x >> np.uint64(4)) & m4)
                    x = ((x << np.uint64(8)) | (x >> np.uint64(8))) & mask16
                    acc |= x << np.uint64(48 - 16 * b)
                z = t * (acc * 2.0**-64)
                neg = (sign_words[k >> 6] >> np.uint64(k & 63)) & one
                s += -z if neg else z
                k += 1
            out[p] = s
        return out

    @njit(cache=True)
    def _marginal_sums_uniform(u_t, sign_words, u_f, counts,
                               eps, ni_alpha):  # pragma: no cover
        paths = counts.shape[0]
        out = np.zeros(paths)
        one = np.uint64(1)
        k = 0
        for p in range(paths):
            s = 0.0
            for _ in range(counts[p]):
                z = eps * u_t[k] ** ni_alpha * u_f[k]
                neg = (sign_words[k >> 6] >> np.uint64(k & 63)) & one
                s += -z if neg else z
                k += 1
            out[p] = s
        return out

    _HAVE_FUSED = True
except ImportError:  # pragma: no cover
    _HAVE_FUSED = False


def expected_points(cfg: StableConfig, eps: float, n_paths: int = 1) -> float:
    return n_paths * fiber_mass(eps, cfg.alpha, cfg.symmetric)


def eps_for_budget(cfg: StableConfig, n_paths: int, budget: Optional[int] = None) -> float:
    """Smallest truncation whose expected cloud fits the point budget."""
    b = budget if budget is not None else cfg.point_budget
    mult = 2.0 if cfg.symmetric else 1.0
    return (n_paths * mult / (cfg.alpha * b)) ** (1.0 / cfg.alpha)


def _check_budget(cfg: StableConfig, eps: float, n_paths: int):
    exp = expected_points(cfg, eps, n_paths)
    if exp > cfg.point_budget:
        raise PointBudgetExceeded(exp, cfg.point_budget, eps_for_budget(cfg, n_paths))


# -- object-lane Poisson sampling (spec-level surface) ------------------------


@dataclass
class PoissonSample:
    """One realized Poisson cloud: extension points plus signs."""

    points: list
    signs: np.ndarray
    eps: float
    mass: float

    @property
    def count(self) -> int:
        return len(self.points)


def sample_poisson_points(cfg: StableConfig, eps: float,
                          rng: np.random.Generator) -> PoissonSample:
    """Draw the truncated cloud: count ~ Poisson(mass), i.i.d. marked points."""
    _check_budget(cfg, eps, 1)
    mass = fiber_mass(eps, cfg.alpha, cfg.symmetric)
    count = int(rng.poisson(mass))
    pts = []
    for _ in range(count):
        base = cfg.system.sample_point(rng)
        t = float(pareto_sample(eps, cfg.alpha, rng))
        pts.append(MaharamPoint(base, math.log(t)))
    if cfg.symmetric:
        signs = np.where(rng.random(count) < 0.5, -1.0, 1.0)
    else:
        signs = np.ones(count)
    return PoissonSample(pts, signs, eps, mass)


# -- compensator ---------------------------------------------------------------


def truncated_clip_integral(y, eps: float, alpha: float):
    """Closed form of the t-integral of clip(t*y) against t^(-1-alpha) on (eps,inf).

    Odd in y; for y > 0 the clip saturates at t = 1/y.
    """
    y = np.asarray(y, dtype=float)
    ay = np.abs(y)
    out = np.zeros_like(ay)
    pos = ay > 0
    a = ay[pos]
    tstar = 1.0 / a
    saturated = tstar <= eps
    res = np.empty_like(a)
    # fully saturated: integral of t^(-1-alpha)
    res[saturated] = eps ** (-alpha) / alpha
    ns = ~saturated
    ans = a[ns]
    if alpha == 1.0:
        lin = ans * (np.log(1.0 / (ans * eps)))
    else:
        lin = ans * ((1.0 / ans) ** (1.0 - alpha) - eps ** (1.0 - alpha)) / (1.0 - alpha)
    res[ns] = lin + ans ** alpha / alpha
    out[pos] = np.sign(y[pos]) * res
    return out


def compensator_values(cfg: StableConfig, eps: float, window=None,
                       n: int = 200_000, seed: int = 0):
    """Per-lag compensator kappa_n with standard errors.

    Symmetric configurations return exact zeros (odd integrand); otherwise
    the fiber integral is closed-form and only the base expectation is
    Monte Carlo.
    """
    if window is None:
        window = cfg.window
    n1, n2 = window
    length = n2 - n1 + 1
    if cfg.symmetric:
        return np.zeros(length), np.zeros(length)
    g = rngmod.substream(seed, "diagnostics", 1)
    offsets = tuple(range(n1, n2 + 1))
    batch = cfg.system.sample_batch(g, n, offsets=offsets)
    est = np.zeros(length)
    se = np.zeros(length)
    from .levy import orbit_values_batch
    y = orbit_values_batch(cfg, batch, np.zeros(n), offsets)  # fiber 1 -> y per lag
    for j in range(length):
        vals = truncated_clip_integral(y[:, j], eps, cfg.alpha)
        est[j] = float(np.mean(vals))
        se[j] = float(np.std(vals) / math.sqrt(n))
    return est, se


# -- vectorized path engine ----------------------------------------------------


@dataclass
class PathSample:
    """A single simulated window, reproducible from (config recipe, seed)."""

    window: tuple[int, int]
    values: np.ndarray
    eps: float
    seed: int
    point_count: int
    compensator: np.ndarray

    def value_at(self, n: int) -> float:
        return float(self.values[n - self.window[0]])


@dataclass
class PathBatch:
    values: np.ndarray  # (n_paths, window length)
    window: tuple[int, int]
    eps: float
    seed: int
    point_counts: np.ndarray
    compensator: np.ndarray
    compensator_se: np.ndarray

    def lag_column(self, n: int) -> np.ndarray:
        return self.values[:, n - self.window[0]]


def _block_paths(cfg: StableConfig, eps: float, length: int) -> int:
    lam = fiber_mass(eps, cfg.alpha, cfg.symmetric)
    per = int(BLOCK_TARGET_POINTS / max(lam * max(length, 1), 1.0))
    return max(1, min(MAX_BLOCK_PATHS, per))


@lru_cache(maxsize=32)
def _cached_config(recipe: tuple) -> StableConfig:
    return StableConfig.from_recipe(dict(recipe))


def _sample_f_only(cfg: StableConfig, g: np.random.Generator, n: int) -> np.ndarray:
    """Spectral values under the base law, using per-system fast draws."""
    sys = cfg.system
    name = cfg.f_spec.name
    if isinstance(sys, Odometer) and name == "binary_fraction":
        return sys.sample_fraction_batch(g, n)
    if isinstance(sys, BernoulliShift) and sys.marginal == "uniform" and name == "coord0":
        return g.random(n)
    if isinstance(sys, GaussianTranslation) and name == "gauss_bump":
        x = g.standard_normal(n)
        return np.exp(-0.5 * x * x)
    batch = sys.sample_batch(g, n, offsets=(0,))
    return cfg.f_spec.batch(batch)


def _simulate_block(args):
    (recipe, eps, window, seed, block, paths) = args
    cfg = _cached_config(tuple(sorted(recipe.items())))
    n1, n2 = window
    length = n2 - n1 + 1
    g_counts = rngmod.substream(seed, "poisson_counts", block)
    g_fiber = rngmod.substream(seed, "fiber", block)
    g_base = rngmod.substream(seed, "base_points", block)
    g_signs = rngmod.substream(seed, "signs", block)
    lam = fiber_mass(eps, cfg.alpha, cfg.symmetric)
    counts = g_counts.poisson(lam, size=paths)
    total = int(counts.sum())
    sums = np.zeros((paths, length))
    if total == 0:
        return sums, counts

    marginal_only = (n1, n2) == (0, 0) and cfg.xi_spec is None
    if marginal_only and cfg.symmetric and _HAVE_FUSED:
        sysb = cfg.system
        if isinstance(sysb, Odometer) and cfg.f_spec.name == "binary_fraction":
            u_t = g_fiber.random(total)
            sign_words = _draw_sign_words(g_signs, total)
            entropy = g_base.integers(0, 1 << 64, size=(total, 4), dtype=np.uint64)
            sums[:, 0] = _marginal_sums_odometer(
                u_t, sign_words, entropy, sysb._alias_table(), counts, eps,
                -1.0 / cfg.alpha)
            return sums, counts
        if (isinstance(sysb, BernoulliShift) and sysb.marginal == "uniform"
                and cfg.f_spec.name == "coord0"):
            u_t = g_fiber.random(total)
            sign_words = _draw_sign_words(g_signs, total)
            u_f = g_base.random(total)
            sums[:, 0] = _marginal_sums_uniform(
                u_t, sign_words, u_f, counts, eps, -1.0 / cfg.alpha)
            return sums, counts

    t = pareto_sample(eps, cfg.alpha, g_fiber, total)
    if cfg.symmetric:
        signs = _draw_signs(g_signs, total)
    else:
        signs = np.ones(total)
    if marginal_only:
        f0 = _sample_f_only(cfg, g_base, total)
        z = signs * t
        z *= f0
        running = np.empty(total + 1)
        running[0] = 0.0
        np.cumsum(z, out=running[1:])
        ends = np.cumsum(counts)
        sums[:, 0] = running[ends] - running[ends - counts]
        return sums, counts

    path_idx = np.repeat(np.arange(paths, dtype=np.int64), counts)

    offsets = tuple(range(n1, n2 + 1))
    batch = cfg.system.sample_batch(g_base, total, offsets=offsets)
    st = signs * t

    def column(lag, z, logw, xi_prod):
        x = np.exp(logw / cfg.alpha) * cfg.f_spec.batch(z) * st * xi_prod
        sums[:, lag - n1] = np.bincount(path_idx, weights=x, minlength=paths)

    sysb = cfg.system
    # forward sweep from lag 0
    z = batch
    logw = np.zeros(total)
    a = np.ones(total)
    if n1 <= 0:
        column(0, z, logw, a)
    for lag in range(1, n2 + 1):
        logw = logw + sysb.batch_log_rn(z, 1)
        if cfg.xi_spec is not None:
            a = a * cfg.xi_spec.batch(z)
        z = sysb.batch_apply(z, 1)
        if lag >= n1:
            column(lag, z, logw, a)
    # backward sweep
    z = batch
    logw = np.zeros(total)
    a = np.ones(total)
    for lag in range(-1, n1 - 1, -1):
        z = sysb.batch_apply(z, -1)
        logw = logw - sysb.batch_log_rn(z, 1)
        if cfg.xi_spec is not None:
            a = a * cfg.xi_spec.batch(z)
        if lag <= n2:
            column(lag, z, logw, a)
    return sums, counts


def simulate_paths(cfg: StableConfig, eps: float, n_paths: int, window=None,
                   seed: int = 0, workers: int = 1,
                   compensator_n: int = 200_000) -> PathBatch:
    """Simulate a batch of independent windows of the stationary process."""
    if window is None:
        window = cfg.window
    n1, n2 = window
    _check_budget(cfg, eps, n_paths)
    comp, comp_se = compensator_values(cfg, eps, window, n=compensator_n, seed=seed)
    per = _block_paths(cfg, eps, n2 - n1 + 1)
    recipe = cfg.recipe()
    tasks = []
    start = 0
    block = 0
    while start < n_paths:
        take = min(per, n_paths - start)
        tasks.append((recipe, eps, window, seed, block, take))
        start += take
        block += 1
    results = map_blocks(_simulate_block, tasks, workers)
    values = np.concatenate([r[0] for r in results], axis=0)
    counts = np.concatenate([r[1] for r in results])
    values = values - comp[None, :]
    return PathBatch(values, window, eps, seed, counts, comp, comp_se)


def simulate_path(cfg: StableConfig, eps: float, window=None,
                  seed: int = 0) -> PathSample:
    """One window; equals row 0 of the batch engine for the same seed."""
    batch = simulate_paths(cfg, eps, n_paths=1, window=window, seed=seed)
    return PathSample(batch.window, batch.values[0], eps, seed,
                      int(batch.point_counts[0]), batch.compensator)


def _simulate_sparse_block(args):
    (recipe, eps, indices, seed, block, paths) = args
    cfg = _cached_config(tuple(sorted(recipe.items())))
    g_counts = rngmod.substream(seed, "poisson_counts", block)
    g_fiber = rngmod.substream(seed, "fiber", block)
    g_base = rngmod.substream(seed, "base_points", block)
    g_signs = rngmod.substream(seed, "signs", block)
    lam = fiber_mass(eps, cfg.alpha, cfg.symmetric)
    counts = g_counts.poisson(lam, size=paths)
    total = int(counts.sum())
    sums = np.zeros((paths, len(indices)))
    if total == 0:
        return sums, counts
    t = pareto_sample(eps, cfg.alpha, g_fiber, total)
    if cfg.symmetric:
        signs = _draw_signs(g_signs, total)
    else:
        signs = np.ones(total)
    path_idx = np.repeat(np.arange(paths, dtype=np.int64), counts)
    batch = cfg.system.sample_batch(g_base, total, offsets=tuple(indices))
    from .levy import orbit_values_batch
    x = orbit_values_batch(cfg, batch, np.log(t), indices)
    for j in range(len(indices)):
        sums[:, j] = np.bincount(path_idx, weights=signs * x[:, j], minlength=paths)
    return sums, counts


def simulate_at_indices(cfg: StableConfig, eps: float, n_paths: int,
                        indices: Sequence[int], seed: int = 0,
                        workers: int = 1) -> np.ndarray:
    """Path values at a sparse, sorted lag list (large lags cost one step each).

    Sign cocycles are not supported here; symmetric configurations only.
    Compensators at sparse lags are the same per-lag values as in the
    contiguous engine (zero for symmetric configurations).
    """
    if cfg.xi_spec is not None:
        raise NotImplementedError("sparse lag simulation does not support sign cocycles")
    indices = sorted(int(i) for i in indices)
    _check_budget(cfg, eps, n_paths)
    if not cfg.symmetric:
        raise NotImplementedError("sparse lag simulation is for symmetric configurations")
    per = _block_paths(cfg, eps, len(indices))
    recipe = cfg.recipe()
    tasks = []
    start = 0
    block = 0
    while start < n_paths:
        take = min(per, n_paths - start)
        tasks.append((recipe, eps, indices, seed, block, take))
        start += take
        block += 1
    results = map_blocks(_simulate_sparse_block, tasks, workers)
    return np.concatenate([r[0] for r in results], axis=0)


def marginal_samples(cfg: StableConfig, eps: float, n_paths: int,
                     seed: int = 0, workers: int = 1) -> np.ndarray:
    """Marginal values X_0 of n_paths independent windows (vectorized)."""
    batch = simulate_paths(cfg, eps, n_paths, window=(0, 0), seed=seed,
                           workers=workers, compensator_n=200_000)
    return batch.values[:, 0]


def path_from_cloud(cfg: StableConfig, cloud: PoissonSample, window=None) -> np.ndarray:
    """Object-lane path sum over an explicit cloud (test oracle for the engine)."""
    if window is None:
        window = cfg.window
    n1, n2 = window
    total = np.zeros(n2 - n1 + 1)
    for sign, pt in zip(cloud.signs, cloud.points):
        if cfg.symmetric:
            w = signed_orbit_window(cfg, pt, int(sign), window)
            total += w.values
        else:
            w = orbit_window(cfg, pt, window)
            total += w.values
    comp, _ = compensator_values(cfg, cloud.eps, window)
    return total - comp


# -- exact SaS oracle ----------------------------------------------------------


def cms_samples(alpha: float, scale: float, rng: np.random.Generator,
                size: int) -> np.ndarray:
    """Exact symmetric alpha-stable variates (Chambers-Mallows-Stuck).

    Scale convention: characteristic function exp(-(scale^alpha) |theta|^alpha).
    Used only as an independent test oracle for simulated marginals.
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    u = (rng.random(size) - 0.5) * np.pi
    if alpha == 1.0:
        return scale * np.tan(u)
    w = rng.standard_exponential(size)
    s = np.sin(alpha * u) / np.cos(u) ** (1.0 / alpha)
    r = (np.cos((1.0 - alpha) * u) / w) ** ((1.0 - alpha) / alpha)
    return scale * s * r


def cms_oracle(alpha: float, scale: float, rng: np.random.Generator) -> float:
    return float(cms_samples(alpha, scale, rng, 1)[0])


def stable_scale(cfg: StableConfig, n: int = 1_000_000, seed: int = 0) -> float:
    """Scale of the limiting SaS marginal: scale^alpha = 2 E|f|^alpha K_alpha.

    K_alpha is the cosine integral of the one-dimensional stable exponent;
    the spectral moment is estimated by Monte Carlo.
    """
    a = cfg.alpha
    if a == 1.0:
        k = np.pi / 2.0
    else:
        k = math.gamma(2.0 - a) * math.cos(np.pi * a / 2.0) / (a * (1.0 - a))
    g = rngmod.substream(seed, "oracle", 7)
    fv = np.abs(_sample_f_only(cfg, g, n)) ** a
    moment = float(np.mean(fv))
    return (2.0 * moment * k) ** (1.0 / a)
