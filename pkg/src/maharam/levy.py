"""Sequence-space realization of stable and semi-stable Levy measures.

A configuration (base system, alpha, spectral function f, optional sign
cocycle) realizes the sigma-finite stable measure on two-sided sequences as
the image of the multiplicative extension under the coordinate map

    x_n = t * rn_n(w)^(1/alpha) * a_n(w) * f(T^n w),

where a_n is the telescoping product of the sign cocycle (1 when absent).
Self-similarity -- dilating sequences by c multiplies the measure by
c^(-alpha) -- is inherited from the fiber and is what ``scaling_check``
verifies, by Monte Carlo over the (point, fiber) parametrization.

For bases whose derivative lives in {lambda^k} the same construction with
the discrete fiber group {b^k}, b = lambda^(-1/alpha), yields the
semi-stable measure of span b; randomizing the fiber over [1, b) recovers
the stable one.  (Span convention: b^(-alpha) = lambda.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import rng as rngmod
from .extension import (
    MaharamPoint,
    fiber_mass,
    pareto_sample,
    sample_span_factor,
    span_normalizer,
)
from .systems import FSpec, Odometer

_DEFAULT_F = {
    "odometer": "binary_fraction",
    "bernoulli": "coord0",
    "translation": "gauss_bump",
}


class ScalingSupportError(ValueError):
    """The requested functional reaches below the sampled fiber region."""


@dataclass
class StableConfig:
    """Parameters of one stable (or semi-stable) process realization."""

    alpha: float
    system: object
    f: Union[str, FSpec, None] = None
    xi: Union[str, FSpec, None] = None
    symmetric: bool = True
    window: tuple[int, int] = (0, 0)
    point_budget: int = 10_000_000
    f_spec: FSpec = field(init=False)
    xi_spec: Optional[FSpec] = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        n1, n2 = self.window
        if n1 > n2:
            raise ValueError(f"window must be nondecreasing, got {self.window}")
        if isinstance(self.f, FSpec):
            self.f_spec = self.f
        else:
            name = self.f or _DEFAULT_F[self.system.kind]
            self.f_spec = self.system.spectral_function(name)
        if self.xi is None:
            self.xi_spec = None
        elif isinstance(self.xi, FSpec):
            self.xi_spec = self.xi
        else:
            self.xi_spec = self.system.sign_cocycle(self.xi)
        self._check_spectral_moment()

    def recipe(self) -> dict:
        """Picklable description sufficient to rebuild the config in a worker."""
        sys = self.system
        params: dict = {"kind": sys.kind}
        if sys.kind == "odometer":
            params["p"] = sys.p
        elif sys.kind == "bernoulli":
            params["marginal"] = sys.marginal
        return {
            "alpha": self.alpha,
            "f": self.f_spec.name,
            "xi": None if self.xi_spec is None else self.xi_spec.name,
            "symmetric": self.symmetric,
            "window_lo": self.window[0],
            "window_hi": self.window[1],
            "point_budget": self.point_budget,
            **params,
        }

    @classmethod
    def from_recipe(cls, r: dict) -> "StableConfig":
        from .systems import make_system

        kind = r["kind"]
        params = {}
        if kind == "odometer":
            params["p"] = r["p"]
        elif kind == "bernoulli":
            params["marginal"] = r.get("marginal", "uniform")
        return cls(
            alpha=r["alpha"],
            system=make_system(kind, **params),
            f=r.get("f"),
            xi=r.get("xi"),
            symmetric=r.get("symmetric", True),
            window=(r.get("window_lo", 0), r.get("window_hi", 0)),
            point_budget=r.get("point_budget", 10_000_000),
        )

    def _check_spectral_moment(self, n: int = 4096):
        g = rngmod.substream(0, "validation")
        batch = self.system.sample_batch(g, n, offsets=(0,))
        fv = np.abs(self.f_spec.batch(batch))
        if not np.any(fv > 0):
            raise ValueError(f"spectral function {self.f_spec.name!r} is zero on a "
                             "sample of size %d" % n)
        m = float(np.mean(fv ** self.alpha))
        if not np.isfinite(m):
            raise ValueError("empirical alpha-moment of the spectral function is not finite")
        if np.max(fv) > self.f_spec.sup + 1e-12:
            raise ValueError(f"spectral function exceeds its declared sup bound "
                             f"{self.f_spec.sup}")


@dataclass
class OrbitWindow:
    """One orbit of the coordinate map over an index window.

    ``values[j]`` is the coordinate at lag ``n1 + j``; ``log_weights``
    records the fiber log-cocycle used per lag and ``exponents`` the exact
    integer lambda-exponents when the base provides them.
    """

    n1: int
    n2: int
    values: np.ndarray
    origin: MaharamPoint
    log_weights: np.ndarray
    exponents: Optional[np.ndarray] = None

    def value_at(self, n: int) -> float:
        if not self.n1 <= n <= self.n2:
            raise IndexError(f"lag {n} outside window [{self.n1}, {self.n2}]")
        return float(self.values[n - self.n1])

    def lags(self) -> np.ndarray:
        return np.arange(self.n1, self.n2 + 1)


def _orbit_terms(cfg: StableConfig, pt: MaharamPoint, window):
    """Per-lag (log cocycle, f value, sign-product) by stepwise composition."""
    sys = cfg.system
    n1, n2 = window
    length = n2 - n1 + 1
    logw = np.zeros(length)
    fvals = np.zeros(length)
    signs = np.ones(length)
    i0 = -n1  # position of lag 0

    def record(lag, lw, base, a):
        j = lag - n1
        logw[j] = lw
        fvals[j] = cfg.f_spec.point(base)
        signs[j] = a

    if n1 <= 0 <= n2:
        record(0, 0.0, pt.base, 1.0)
    # forward sweep
    z, lw, a = pt.base, 0.0, 1.0
    for lag in range(1, n2 + 1):
        lw += sys.log_rn(z, 1)
        if cfg.xi_spec is not None:
            a *= cfg.xi_spec.point(z)
        z = sys.apply(z, 1)
        if lag >= n1:
            record(lag, lw, z, a)
    # backward sweep
    z, lw, a = pt.base, 0.0, 1.0
    for lag in range(-1, n1 - 1, -1):
        z = sys.apply(z, -1)
        lw -= sys.log_rn(z, 1)
        if cfg.xi_spec is not None:
            a /= cfg.xi_spec.point(z)
        if lag <= n2:
            record(lag, lw, z, a)
    return logw, fvals, signs, i0


def orbit_window(cfg: StableConfig, pt: MaharamPoint, window=None) -> OrbitWindow:
    """Coordinates x_n = t * rn_n^(1/alpha) * f(T^n w) over the window."""
    if window is None:
        window = cfg.window
    logw, fvals, _, _ = _orbit_terms(cfg, pt, window)
    values = np.exp(pt.log_fiber + logw / cfg.alpha) * fvals
    expo = _exact_exponents(cfg, logw)
    return OrbitWindow(window[0], window[1], values, pt, logw, expo)


def signed_orbit_window(cfg: StableConfig, pt: MaharamPoint, sign: int = 1,
                        window=None) -> OrbitWindow:
    """Symmetric-case orbit: sign times the telescoping xi-product enters."""
    if sign not in (-1, 1):
        raise ValueError(f"sign must be +-1, got {sign}")
    if window is None:
        window = cfg.window
    logw, fvals, signs, _ = _orbit_terms(cfg, pt, window)
    values = sign * signs * np.exp(pt.log_fiber + logw / cfg.alpha) * fvals
    expo = _exact_exponents(cfg, logw)
    return OrbitWindow(window[0], window[1], values, pt, logw, expo)


def _exact_exponents(cfg, logw):
    if isinstance(cfg.system, Odometer):
        return np.rint(logw / cfg.system.log_lam).astype(np.int64)
    return None


def orbit_values_batch(cfg: StableConfig, batch, log_fiber: np.ndarray,
                       indices: Sequence[int]) -> np.ndarray:
    """Vectorized coordinates at the given lags; column j is lag indices[j].

    Lags are reached by direct m-addition, so scattered large lags (rigidity
    scans at 2^k) cost one application each.  Sign cocycles force stepwise
    products and are only supported for contiguous windows starting near 0.
    """
    sys = cfg.system
    n = len(log_fiber)
    out = np.empty((n, len(indices)))
    if cfg.xi_spec is None:
        for j, lag in enumerate(indices):
            shifted = sys.batch_apply(batch, lag)
            logw = sys.batch_log_rn(batch, lag)
            out[:, j] = np.exp(log_fiber + logw / cfg.alpha) * cfg.f_spec.batch(shifted)
        return out
    lags = list(indices)
    if lags != sorted(lags) or lags[0] < 0:
        raise NotImplementedError("sign cocycles need a sorted nonnegative lag list")
    a = np.ones(n)
    z = batch
    pos = 0
    for j, lag in enumerate(lags):
        while pos < lag:
            a = a * cfg.xi_spec.batch(z)
            z = sys.batch_apply(z, 1)
            pos += 1
        logw = sys.batch_log_rn(batch, lag)
        out[:, j] = a * np.exp(log_fiber + logw / cfg.alpha) * cfg.f_spec.batch(z)
    return out


def levy_integral_constant(alpha: float) -> float:
    """integral over (0,inf) of (z^2 min 1) z^(-1-alpha) dz = 1/(2-alpha) + 1/alpha."""
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"the integral diverges outside alpha in (0, 2); got {alpha}")
    return 1.0 / (2.0 - alpha) + 1.0 / alpha


def levy_integrability(cfg: StableConfig, n: int = 100_000, seed: int = 0):
    """Monte-Carlo bound on the defining moment of the realized measure.

    Returns (value, se): the integral constant times the estimated
    alpha-moment of f under the base law.
    """
    g = rngmod.substream(seed, "diagnostics")
    batch = cfg.system.sample_batch(g, n, offsets=(0,))
    m = np.abs(cfg.f_spec.batch(batch)) ** cfg.alpha
    c = levy_integral_constant(cfg.alpha)
    return c * float(np.mean(m)), c * float(np.std(m) / math.sqrt(n))


@dataclass
class WindowFunctional:
    """Bounded test functional on sequence windows, vanishing near zero.

    ``fn`` maps a value matrix (samples x len(indices)) to one number per
    row; it must vanish whenever |x_0| <= support_floor, which is what makes
    truncated sampling exact.
    """

    indices: tuple[int, ...]
    fn: Callable[[np.ndarray], np.ndarray]
    support_floor: float
    label: str = ""


def abs_band(lo: float, hi: float, indices=(0,)) -> WindowFunctional:
    """Indicator of lo < |x_0| <= hi."""
    def fn(x):
        a = np.abs(x[:, 0])
        return ((a > lo) & (a <= hi)).astype(float)
    return WindowFunctional(tuple(indices), fn, lo, f"1(|x0| in ({lo},{hi}])")


def scaling_check(cfg: StableConfig, c: float, functional: WindowFunctional,
                  eps: float, n: int = 100_000, seed: int = 0):
    """Compare integral of F(x/c) with c^(-alpha) integral of F(x).

    Both sides are estimated from one point cloud of the (point, fiber)
    parametrization (the dilation only rescales the fiber), so the returned
    standard error is that of the difference.  Returns (lhs, rhs, se).
    """
    if c <= 0:
        raise ValueError(f"dilation factor must be positive, got {c}")
    if 0 not in functional.indices:
        raise ValueError("functional must observe lag 0 to state its support")
    delta = functional.support_floor
    t_floor = min(c, 1.0) * delta / cfg.f_spec.sup
    if t_floor < eps:
        raise ScalingSupportError(
            f"functional support |x0| > {delta} reaches fiber values down to "
            f"{t_floor:.3g} < truncation {eps:.3g}; the sampled region would "
            f"miss mass and bias the test. Raise the support floor above "
            f"{eps * cfg.f_spec.sup / min(c, 1.0):.3g} or lower eps."
        )
    g_base = rngmod.substream(seed, "base_points")
    g_fib = rngmod.substream(seed, "fiber")
    g_sig = rngmod.substream(seed, "signs")
    batch = cfg.system.sample_batch(g_base, n, offsets=functional.indices)
    t = pareto_sample(t_floor, cfg.alpha, g_fib, n)
    log_t = np.log(t)
    x = orbit_values_batch(cfg, batch, log_t, functional.indices)
    if cfg.symmetric:
        x = x * np.where(g_sig.random(n) < 0.5, -1.0, 1.0)[:, None]
    mass = fiber_mass(t_floor, cfg.alpha, cfg.symmetric)
    f_scaled = functional.fn(x / c)
    f_plain = functional.fn(x)
    lhs = mass * float(np.mean(f_scaled))
    rhs = c ** (-cfg.alpha) * mass * float(np.mean(f_plain))
    diff = f_scaled - c ** (-cfg.alpha) * f_plain
    se = mass * float(np.std(diff) / math.sqrt(n))
    return lhs, rhs, se


# -- semi-stable lane --------------------------------------------------------


def semistable_span(cfg: StableConfig) -> float:
    """Span b with b^(-alpha) = lambda of the base derivative group."""
    sys = cfg.system
    if not isinstance(sys, Odometer):
        raise ValueError("semi-stable construction needs a base with derivative "
                         "values in {lambda^k}")
    return sys.lam ** (-1.0 / cfg.alpha)


def semistable_orbit(cfg: StableConfig, pt: MaharamPoint, window=None) -> OrbitWindow:
    """Orbit with the fiber kept exactly in the span group {b^k}."""
    if pt.fiber_exponent is None:
        raise ValueError("semistable_orbit needs a discrete-fiber point")
    if window is None:
        window = cfg.window
    b = semistable_span(cfg)
    logw, fvals, signs, _ = _orbit_terms(cfg, pt, window)
    expo = _exact_exponents(cfg, logw)
    if expo is None:
        raise ValueError("base system does not provide exact exponents")
    # fiber exponent after n steps: k - exponent_n  (b^-j per lambda^j)
    k = pt.fiber_exponent + (-expo)
    values = signs * b ** k.astype(float) * fvals
    return OrbitWindow(window[0], window[1], values, pt, logw, k)


def randomize_semistable(cfg: StableConfig, pt: MaharamPoint,
                         rng: np.random.Generator) -> MaharamPoint:
    """Lift a discrete-fiber point to the continuous fiber: t = b^k * u.

    u is drawn on [1, b) with density u^(-1-alpha)/normalizer, which glues
    the discrete bands back into the full power-law fiber.
    """
    if pt.fiber_exponent is None:
        raise ValueError("randomize_semistable needs a discrete-fiber point")
    b = semistable_span(cfg)
    u = float(sample_span_factor(cfg.alpha, b, rng))
    return MaharamPoint(pt.base, pt.fiber_exponent * math.log(b) + math.log(u))


def semistable_beta(cfg: StableConfig) -> float:
    """Normalizing mass of the span band [1, b)."""
    return span_normalizer(cfg.alpha, semistable_span(cfg))
