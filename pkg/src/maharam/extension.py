"""Skew-product extensions that make a nonsingular system measure preserving.

The multiplicative extension of a base system T acts on (point, fiber) as

    (w, t) -> (T w, t * rn(w)^(1/alpha)),      fiber measure t^(-1-alpha) dt,

and the additive representation uses fiber s with measure e^s ds.  The two
are linked by t = exp(-s/alpha): that map transports e^s ds to
alpha * t^(-1-alpha) dt (the constant is absorbed in normalization), and a
shift s -> s - u on the additive fiber becomes multiplication by
exp(u/alpha).  Both facts are verified by quadrature in the tests rather
than trusted from any printed constant.

When the base derivative lives in {lambda^k}, the discrete extension keeps
the fiber in the exact group {b^k}, b = lambda^(-1/alpha), using integer
exponents only.

Dilation convention: for the fiber measure, mass(dilated-by-c set) =
c^(-alpha) * mass(set); this is the orientation that is exactly true for
t^(-1-alpha) dt and is what ``dilation_mass_ratio`` checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np


@dataclass
class MaharamPoint:
    """Point of an extension: base point plus fiber in log coordinates.

    ``log_fiber`` carries the multiplicative fiber t = exp(log_fiber) > 0;
    ``fiber_exponent`` is set instead for discrete extensions, where the
    fiber is exactly b**fiber_exponent.
    """

    base: object
    log_fiber: float = 0.0
    fiber_exponent: Optional[int] = None

    @property
    def fiber(self) -> float:
        return float(np.exp(self.log_fiber))


@dataclass
class FiberLaw:
    """Fiber reference measure of an extension.

    representation: 'additive' (e^s ds on R), 'multiplicative'
    (s^(-1-alpha) ds on (0, inf)) or 'discrete' (sum g^(-alpha) delta_g over
    the span group {b^k}).
    """

    alpha: float
    representation: str = "multiplicative"
    span: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        if self.representation not in ("additive", "multiplicative", "discrete"):
            raise ValueError(f"unknown representation {self.representation!r}")
        if self.representation == "discrete":
            if self.span is None or self.span <= 1.0:
                raise ValueError("discrete fiber law needs span b > 1")


def maharam_apply(sys, alpha: float, pt: MaharamPoint, n: int) -> MaharamPoint:
    """n-step extension map: base moves by T^n, fiber picks up rn^(1/alpha)."""
    if pt.fiber_exponent is not None:
        raise ValueError("point is in discrete coordinates; use discrete_maharam_apply")
    base = sys.apply(pt.base, n)
    log_fiber = pt.log_fiber + sys.log_rn(pt.base, n) / alpha
    return MaharamPoint(base, log_fiber)


def discrete_maharam_apply(sys, alpha: float, pt: MaharamPoint, n: int) -> MaharamPoint:
    """Extension step with the fiber kept exactly in the span group {b^k}.

    The base derivative lambda^j contributes b^(-j) to the fiber
    (b = lambda^(-1/alpha)), so only integer exponent arithmetic happens.
    Measure-preserving bases are allowed (exponent stays 0).
    """
    if pt.fiber_exponent is None:
        raise ValueError("point is not in discrete coordinates")
    if sys.is_measure_preserving:
        return MaharamPoint(sys.apply(pt.base, n), fiber_exponent=pt.fiber_exponent)
    rn = sys.rn(pt.base, n)
    if rn.lambda_exponent is None:
        raise ValueError(
            f"system {sys.kind!r} does not have derivative values in a group "
            "{lambda^k}; discrete extension undefined"
        )
    return MaharamPoint(sys.apply(pt.base, n),
                        fiber_exponent=pt.fiber_exponent - rn.lambda_exponent)


def scaling_flow(pt: MaharamPoint, c: float) -> MaharamPoint:
    """Multiply the fiber by c > 0; commutes with the extension maps."""
    if c <= 0:
        raise ValueError(f"scaling factor must be positive, got {c}")
    if pt.fiber_exponent is not None:
        raise ValueError("scaling flow acts on continuous fiber coordinates")
    return MaharamPoint(pt.base, pt.log_fiber + math.log(c))


def additive_to_multiplicative(s: Union[float, np.ndarray], alpha: float):
    """Fiber change of coordinates t = exp(-s/alpha).

    Transports e^s ds to alpha * t^(-1-alpha) dt and turns the additive
    shift flow into fiber multiplication.
    """
    return np.exp(-np.asarray(s, dtype=float) / alpha)


def multiplicative_to_additive(t: Union[float, np.ndarray], alpha: float):
    return -alpha * np.log(np.asarray(t, dtype=float))


def fiber_mass(eps: float, alpha: float, symmetric: bool = False) -> float:
    """Mass of t^(-1-alpha) dt on (eps, inf); doubled for the two-sided law."""
    if eps <= 0:
        raise ValueError(f"truncation must be positive, got {eps}")
    m = eps ** (-alpha) / alpha
    return 2.0 * m if symmetric else m


def pareto_sample(eps: float, alpha: float, rng: np.random.Generator, size=None):
    """Draw from the normalized restriction of t^(-1-alpha) dt to (eps, inf)."""
    if eps <= 0:
        raise ValueError(f"truncation must be positive, got {eps}")
    u = rng.random(size)
    return eps * u ** (-1.0 / alpha)


def pareto_interval_mass(a: float, b: float, alpha: float) -> float:
    """Closed-form mass of t^(-1-alpha) dt on (a, b), 0 < a < b."""
    if not 0 < a < b:
        raise ValueError("need 0 < a < b")
    return (a ** (-alpha) - b ** (-alpha)) / alpha


def dilation_mass_ratio(a: float, b: float, c: float, alpha: float) -> float:
    """mass(c*(a,b)) / mass(a,b) for the fiber measure; equals c^(-alpha)."""
    return pareto_interval_mass(c * a, c * b, alpha) / pareto_interval_mass(a, b, alpha)


def span_normalizer(alpha: float, b: float) -> float:
    """Mass of t^(-1-alpha) dt on [1, b): (1 - b^-alpha) / alpha."""
    if b <= 1:
        raise ValueError(f"span must exceed 1, got {b}")
    return (1.0 - b ** (-alpha)) / alpha


def sample_span_factor(alpha: float, b: float, rng: np.random.Generator, size=None):
    """Draw u on [1, b) with density u^(-1-alpha)/normalizer (inverse transform)."""
    u = rng.random(size)
    return (1.0 - u * (1.0 - b ** (-alpha))) ** (-1.0 / alpha)


def discrete_embedding_mass(a: float, c: float, alpha: float, b: float) -> float:
    """Mass that m_b x (t^(-1-alpha) dt on [1,b)) pushes onto the interval (a, c)
    under (g, u) -> g*u.

    Summed atom by atom in closed form; equals the continuous fiber mass of
    (a, c) because the bands [g, g*b) tile (0, inf).
    """
    if not 0 < a < c:
        raise ValueError("need 0 < a < c")
    total = 0.0
    kmin = math.floor(math.log(a, b)) - 1
    kmax = math.ceil(math.log(c, b)) + 1
    for k in range(kmin, kmax + 1):
        g = b ** k
        lo_u = max(1.0, a / g)
        hi_u = min(b, c / g)
        if lo_u < hi_u:
            # atom mass g^-alpha times the u-band integral
            total += g ** (-alpha) * pareto_interval_mass(lo_u, hi_u, alpha)
    return total
