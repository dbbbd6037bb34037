"""Built-in nonsingular dynamical systems with exact cocycle evaluation.

Three families are provided:

* ``Odometer(p)``      -- add-one map on dyadic integers under the biased
  product measure (P(bit=1) = p, 1/2 < p < 1).  Its derivative takes values
  in the group {lambda^k : k in Z}, lambda = (1-p)/p, and is computed in
  exact integer exponents.
* ``BernoulliShift``   -- i.i.d.-coordinate shift, measure preserving.
* ``GaussianTranslation`` -- x -> x+1 on the real line under the standard
  normal law; dissipative, with a generic real-valued log-derivative.

Derivative orientation: ``rn`` here always means the density of the image
measure, d(mu o T^n)/d mu, evaluated at the point.  For the odometer this is
the cylinder-mass ratio mu(T^n C)/mu(C) over small cylinders C containing
the point; the convention is pinned by exact rational cylinder tests, not
by any printed formula.

Bits of a dyadic point are indexed from 1.  ``step_exponent`` (the exponent
of lambda for a single forward step) equals (index of first 0 bit) - 2.

Each system has two lanes:

* an object lane (``DyadicPoint`` / ``ShiftPoint`` / floats) with lazy,
  immutable materialization -- used for the spec-level point operations;
* a packed batch lane (numpy arrays; dyadic points as two uint64 limbs,
  LSB = bit 1) -- used by the Monte-Carlo estimators.  Carries past 128
  bits have probability ~ p^128 and raise ``DepthCapExceeded``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

UMAX = np.uint64(0xFFFFFFFFFFFFFFFF)
_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_ONE = np.uint64(1)

DEFAULT_DEPTH = 64
DEPTH_CAP = 4096


class DepthCapExceeded(RuntimeError):
    """A carry/borrow chain ran past the configured bit-depth cap."""


def popcount64(x: np.ndarray) -> np.ndarray:
    x = x - ((x >> _ONE) & _M1)
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return ((x * _H01) >> np.uint64(56)).astype(np.int64)


def bitreverse64(x: np.ndarray) -> np.ndarray:
    x = ((x & _M1) << _ONE) | ((x >> _ONE) & _M1)
    x = ((x & _M2) << np.uint64(2)) | ((x >> np.uint64(2)) & _M2)
    x = ((x & _M4) << np.uint64(4)) | ((x >> np.uint64(4)) & _M4)
    return x.byteswap()


@dataclass
class CocycleValue:
    """Value of an iterated derivative, kept in log domain.

    For the odometer the lambda-exponent is exact integer arithmetic and
    ``log_value = exponent * log(lambda)``; for generic systems only the
    real log is carried.
    """

    log_value: float
    lambda_exponent: Optional[int] = None

    @property
    def value(self) -> float:
        return float(np.exp(self.log_value))


class _BitTail:
    """Shared lazily-sampled tail of a dyadic point's bit sequence.

    Bits, once sampled, never change; points produced by translation share
    the tail and override a finite prefix.
    """

    def __init__(self, p: float, rng: np.random.Generator, depth_cap: int = DEPTH_CAP):
        self.p = p
        self.rng = rng
        self.depth_cap = depth_cap
        self.bits: list[int] = []

    def bit(self, i: int) -> int:
        if i > self.depth_cap:
            raise DepthCapExceeded(
                f"bit index {i} exceeds depth cap {self.depth_cap}; "
                "the point behaves like an all-ones tail"
            )
        while len(self.bits) < i:
            self.bits.append(int(self.rng.random() < self.p))
        return self.bits[i - 1]


class DyadicPoint:
    """A dyadic integer: finite bit prefix over a shared lazy tail."""

    __slots__ = ("prefix", "tail")

    def __init__(self, prefix: tuple[int, ...], tail: _BitTail):
        self.prefix = prefix
        self.tail = tail

    @classmethod
    def from_bits(cls, bits, p: float = 0.5, rng: Optional[np.random.Generator] = None,
                  depth_cap: int = DEPTH_CAP) -> "DyadicPoint":
        """Point with a pinned prefix; bits beyond it are sampled lazily."""
        if rng is None:
            rng = np.random.default_rng(0)
        return cls(tuple(int(b) for b in bits), _BitTail(p, rng, depth_cap))

    def bit(self, i: int) -> int:
        if i <= len(self.prefix):
            return self.prefix[i - 1]
        return self.tail.bit(i)

    def bits_upto(self, n: int) -> tuple[int, ...]:
        return tuple(self.bit(i) for i in range(1, n + 1))

    def materialized_depth(self) -> int:
        return max(len(self.prefix), len(self.tail.bits))

    def __repr__(self):
        shown = self.bits_upto(min(16, max(8, len(self.prefix))))
        return f"DyadicPoint({''.join(map(str, shown))}...)"


class PackedDyadic:
    """Batch of dyadic points as two uint64 limbs (bit 1 = LSB of lo)."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: np.ndarray, hi: np.ndarray):
        self.lo = lo
        self.hi = hi

    def __len__(self):
        return len(self.lo)

    def copy(self) -> "PackedDyadic":
        return PackedDyadic(self.lo.copy(), self.hi.copy())


class Odometer:
    """Translation by one on dyadic integers under the biased product law."""

    kind = "odometer"
    is_measure_preserving = False
    krieger_type = "III_lambda"

    def __init__(self, p: float):
        p = float(p)
        if not 0.5 < p < 1.0:
            raise ValueError(f"odometer bias p must lie in (1/2, 1), got {p}")
        self.p = p
        self.lam = (1.0 - p) / p
        self.log_lam = float(np.log1p(-p) - np.log(p))

    # -- object lane -------------------------------------------------------

    def sample_point(self, rng: np.random.Generator, depth: int = DEFAULT_DEPTH) -> DyadicPoint:
        tail = _BitTail(self.p, rng.spawn(1)[0])
        pt = DyadicPoint((), tail)
        pt.bits_upto(depth)
        return pt

    def apply(self, x: DyadicPoint, m: int) -> DyadicPoint:
        """x + m in the dyadic group (borrow for negative m)."""
        if m == 0:
            return x
        out: list[int] = []
        i = 1
        if m > 0:
            value = m
            while value:
                total = x.bit(i) + (value & 1)
                out.append(total & 1)
                value = (value >> 1) + (total >> 1)
                i += 1
        else:
            value = -m
            borrow = 0
            while value or borrow:
                d = x.bit(i) - (value & 1) - borrow
                borrow = int(d < 0)
                out.append(d & 1)
                value >>= 1
                i += 1
                if i > x.tail.depth_cap:
                    raise DepthCapExceeded("borrow chain exceeded depth cap")
        # bits beyond the carry end are untouched; keep x's remaining prefix
        rest = x.prefix[len(out):]
        return DyadicPoint(tuple(out) + rest, x.tail)

    def step_exponent(self, x: DyadicPoint) -> int:
        """Exponent of lambda for one forward step: (first 0-bit index) - 2."""
        i = 1
        while x.bit(i) == 1:
            i += 1
        return i - 2

    def rn_exponent(self, x: DyadicPoint, m: int, method: str = "bits") -> int:
        """lambda-exponent of d(mu o tau^m)/d mu at x, two independent ways.

        ``bits``:  signed count of flipped bits between x and x+m (the
                   cylinder-mass ratio in exponent form).
        ``steps``: telescoped sum of step exponents along the orbit.
        """
        if method == "bits":
            y = self.apply(x, m)
            depth = max(len(x.prefix), len(y.prefix))
            e = 0
            for i in range(1, depth + 1):
                xb, yb = x.bit(i), y.bit(i)
                e += (xb - yb)
            return e
        if method == "steps":
            e = 0
            if m >= 0:
                z = x
                for _ in range(m):
                    e += self.step_exponent(z)
                    z = self.apply(z, 1)
            else:
                z = x
                for _ in range(-m):
                    z = self.apply(z, -1)
                    e -= self.step_exponent(z)
            return e
        raise ValueError(f"unknown method {method!r}")

    def rn(self, x: DyadicPoint, m: int) -> CocycleValue:
        e = self.rn_exponent(x, m)
        return CocycleValue(e * self.log_lam, lambda_exponent=e)

    def log_rn(self, x: DyadicPoint, m: int) -> float:
        return self.rn(x, m).log_value

    def cylinder_mass(self, bits) -> Fraction:
        """Exact product-measure mass of a cylinder (requires rational p)."""
        p = Fraction(self.p).limit_denominator(10**12)
        out = Fraction(1)
        for b in bits:
            out *= p if b else (1 - p)
        return out

    # -- packed batch lane ---------------------------------------------------

    def sample_batch(self, rng: np.random.Generator, n: int, offsets=None) -> PackedDyadic:
        lo = self._sample_limb(rng, n)
        hi = self._sample_limb(rng, n)
        return PackedDyadic(lo, hi)

    def _sample_limb(self, rng: np.random.Generator, n: int) -> np.ndarray:
        bits = rng.random((n, 64)) < self.p
        return np.packbits(bits, axis=1, bitorder="little").view(np.uint64).ravel()

    def batch_apply(self, pts: PackedDyadic, m: int) -> PackedDyadic:
        if m == 0:
            return pts
        if m > 0:
            mm = np.uint64(m)
            lo = pts.lo + mm
            carry = lo < mm
            hi = pts.hi + carry.astype(np.uint64)
            if np.any(carry & (pts.hi == UMAX)):
                raise DepthCapExceeded("carry past 128 materialized bits")
        else:
            mm = np.uint64(-m)
            borrow = pts.lo < mm
            lo = pts.lo - mm
            hi = pts.hi - borrow.astype(np.uint64)
            if np.any(borrow & (pts.hi == np.uint64(0))):
                raise DepthCapExceeded("borrow past 128 materialized bits")
        return PackedDyadic(lo, hi)

    def batch_step_exponent(self, pts: PackedDyadic) -> np.ndarray:
        lz = (~pts.lo) & (pts.lo + _ONE)
        phi = popcount64(lz - _ONE) - 1
        deep = lz == 0
        if np.any(deep):
            hd = pts.hi[deep]
            lzh = (~hd) & (hd + _ONE)
            if np.any(lzh == 0):
                raise DepthCapExceeded("no 0 bit in 128 materialized bits")
            phi[deep] = 64 + popcount64(lzh - _ONE) - 1
        return phi

    def batch_rn_exponent(self, pts: PackedDyadic, m: int, method: str = "bits") -> np.ndarray:
        if method == "bits":
            y = self.batch_apply(pts, m)
            e = popcount64(pts.lo & ~y.lo) - popcount64(~pts.lo & y.lo)
            e += popcount64(pts.hi & ~y.hi) - popcount64(~pts.hi & y.hi)
            return e
        if method == "steps":
            e = np.zeros(len(pts), dtype=np.int64)
            z = pts
            if m >= 0:
                for _ in range(m):
                    e += self.batch_step_exponent(z)
                    z = self.batch_apply(z, 1)
            else:
                for _ in range(-m):
                    z = self.batch_apply(z, -1)
                    e -= self.batch_step_exponent(z)
            return e
        raise ValueError(f"unknown method {method!r}")

    def batch_log_rn(self, pts: PackedDyadic, m: int) -> np.ndarray:
        return self.batch_rn_exponent(pts, m) * self.log_lam

    @staticmethod
    def batch_fraction(pts: PackedDyadic) -> np.ndarray:
        """sum_{i<=64} bit_i 2^-i, exactly rounded (reversed limb / 2^64)."""
        return bitreverse64(pts.lo).astype(np.float64) * 2.0**-64

    def sample_fraction_batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Direct draw of batch_fraction(sample_batch(...)) values.

        The 64 biased bits are drawn as four independent 16-bit blocks from
        an alias table over all 2^16 prefixes, then recombined into the same
        integer the packed lane would reverse; one uint64 of entropy per
        block (16 index bits + 48 acceptance bits, threshold quantization
        error < 2^-48 per category).  The compiled and fallback kernels do
        the same integer operations, so outputs do not depend on which ran.
        """
        combo = self._alias_table()
        entropy = rng.integers(0, 1 << 64, size=(n, 4), dtype=np.uint64)
        return _fraction_kernel(entropy, combo)

    def _alias_table(self) -> dict:
        if getattr(self, "_alias_cache", None) is None:
            k = 1 << 16
            ids = np.arange(k, dtype=np.uint64)
            ones = popcount64(ids)
            probs = self.p ** ones * (1.0 - self.p) ** (16 - ones)
            # Vose alias construction
            scaled = probs * k
            alias = np.zeros(k, dtype=np.int64)
            residual = np.ones(k)
            small = [i for i in range(k) if scaled[i] < 1.0]
            large = [i for i in range(k) if scaled[i] >= 1.0]
            scaled = scaled.tolist()
            while small and large:
                s = small.pop()
                l = large.pop()
                residual[s] = scaled[s]
                alias[s] = l
                scaled[l] = (scaled[l] + scaled[s]) - 1.0
                (small if scaled[l] < 1.0 else large).append(l)
            for i in small + large:
                residual[i] = 1.0
                alias[i] = i
            thresh = np.minimum(np.round(residual * 2.0**48),
                                2.0**48 - 1.0).astype(np.uint64)
            # one fused table: 48 acceptance bits | 16 alias bits
            combo = (thresh << np.uint64(16)) | alias.astype(np.uint64)
            self._alias_cache = combo
        return self._alias_cache

    # -- spectral / sign functions ------------------------------------------

    def spectral_function(self, name: str) -> "FSpec":
        if name == "binary_fraction":
            def point(pt: DyadicPoint) -> float:
                r = 0
                for i in range(1, 65):
                    r |= pt.bit(i) << (64 - i)
                return float(np.float64(r) * 2.0**-64)
            return FSpec(name, point, self.batch_fraction, sup=1.0)
        if name == "first_bit":
            return FSpec(
                name,
                lambda pt: float(pt.bit(1)),
                lambda b: (b.lo & _ONE).astype(np.float64),
                sup=1.0,
            )
        if name == "one":
            return FSpec(name, lambda pt: 1.0, lambda b: np.ones(len(b)), sup=1.0)
        raise ValueError(f"odometer has no spectral function {name!r}")

    def sign_cocycle(self, name: str) -> "FSpec":
        if name == "first_bit_sign":
            return FSpec(
                name,
                lambda pt: 1.0 - 2.0 * pt.bit(1),
                lambda b: 1.0 - 2.0 * (b.lo & _ONE).astype(np.float64),
                sup=1.0,
            )
        raise ValueError(f"odometer has no sign cocycle {name!r}")


@dataclass
class FSpec:
    """A function on base points with both object- and batch-lane evaluators.

    ``span`` is the highest coordinate offset the function reads (shift
    systems need those columns materialized).
    """

    name: str
    point: Callable
    batch: Callable
    sup: float = 1.0
    span: int = 0

    def __call__(self, pt):
        return self.point(pt)


class ShiftPoint:
    """Point of the i.i.d.-coordinate shift: lazy two-sided coordinate store."""

    __slots__ = ("store", "rng", "offset", "draw")

    def __init__(self, store: dict, rng: np.random.Generator, draw: Callable, offset: int = 0):
        self.store = store
        self.rng = rng
        self.draw = draw
        self.offset = offset

    def coordinate(self, k: int) -> float:
        j = self.offset + k
        if j not in self.store:
            self.store[j] = self.draw(self.rng)
        return self.store[j]


class ShiftBatch:
    """Batch of shift points: pre-drawn coordinate columns, shared offset."""

    __slots__ = ("coords", "offset")

    def __init__(self, coords: dict, offset: int = 0):
        self.coords = coords
        self.offset = offset

    def __len__(self):
        for v in self.coords.values():
            return len(v)
        return 0

    def column(self, k: int) -> np.ndarray:
        j = self.offset + k
        if j not in self.coords:
            raise KeyError(
                f"coordinate {j} was not materialized; declare it in "
                "sample_batch(offsets=...)"
            )
        return self.coords[j]


class BernoulliShift:
    """Shift on i.i.d. coordinates; measure preserving (derivative = 1)."""

    kind = "bernoulli"
    is_measure_preserving = True
    krieger_type = "II_1"

    def __init__(self, marginal: str = "uniform"):
        if marginal not in ("uniform", "gaussian"):
            raise ValueError(f"unknown marginal {marginal!r}")
        self.marginal = marginal

    def _draw(self, rng: np.random.Generator) -> float:
        return float(rng.random() if self.marginal == "uniform" else rng.standard_normal())

    def _draw_batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.random(n) if self.marginal == "uniform" else rng.standard_normal(n)

    def sample_point(self, rng: np.random.Generator) -> ShiftPoint:
        return ShiftPoint({}, rng.spawn(1)[0], self._draw)

    def apply(self, x: ShiftPoint, m: int) -> ShiftPoint:
        return ShiftPoint(x.store, x.rng, x.draw, x.offset + m)

    def log_rn(self, x, m: int) -> float:
        return 0.0

    def rn(self, x, m: int) -> CocycleValue:
        return CocycleValue(0.0)

    def sample_batch(self, rng: np.random.Generator, n: int, offsets=(0,)) -> ShiftBatch:
        coords = {}
        for j in sorted(set(int(o) for o in offsets)):
            coords[j] = self._draw_batch(rng, n)
        return ShiftBatch(coords)

    def batch_apply(self, b: ShiftBatch, m: int) -> ShiftBatch:
        return ShiftBatch(b.coords, b.offset + m)

    def batch_log_rn(self, b: ShiftBatch, m: int) -> np.ndarray:
        return np.zeros(len(b))

    def spectral_function(self, name: str) -> FSpec:
        if name == "coord0":
            return FSpec(name, lambda pt: pt.coordinate(0), lambda b: b.column(0), sup=1.0)
        if name == "coord0_centered":
            return FSpec(
                name,
                lambda pt: pt.coordinate(0) - 0.5,
                lambda b: b.column(0) - 0.5,
                sup=0.5,
            )
        if name == "one":
            return FSpec(name, lambda pt: 1.0, lambda b: np.ones(len(b)), sup=1.0)
        raise ValueError(f"bernoulli shift has no spectral function {name!r}")

    def sign_cocycle(self, name: str) -> FSpec:
        if name == "coord_sign":
            return FSpec(
                name,
                lambda pt: 1.0 if pt.coordinate(0) >= 0.5 else -1.0,
                lambda b: np.where(b.column(0) >= 0.5, 1.0, -1.0),
                sup=1.0,
            )
        raise ValueError(f"bernoulli shift has no sign cocycle {name!r}")


class GaussianTranslation:
    """x -> x + 1 on the line under N(0,1); dissipative, generic cocycle."""

    kind = "translation"
    is_measure_preserving = False
    krieger_type = "I_inf"

    def sample_point(self, rng: np.random.Generator) -> float:
        return float(rng.standard_normal())

    def apply(self, x: float, m: int) -> float:
        return x + m

    def log_rn(self, x: float, m: int) -> float:
        # log of phi(x+m)/phi(x) for the standard normal density
        return -m * x - 0.5 * m * m

    def rn(self, x: float, m: int) -> CocycleValue:
        return CocycleValue(self.log_rn(x, m))

    def sample_batch(self, rng: np.random.Generator, n: int, offsets=None) -> np.ndarray:
        return rng.standard_normal(n)

    def batch_apply(self, b: np.ndarray, m: int) -> np.ndarray:
        return b + m

    def batch_log_rn(self, b: np.ndarray, m: int) -> np.ndarray:
        return -m * b - 0.5 * m * m

    def spectral_function(self, name: str) -> FSpec:
        if name == "gauss_bump":
            return FSpec(
                name,
                lambda pt: float(np.exp(-0.5 * pt * pt)),
                lambda b: np.exp(-0.5 * b * b),
                sup=1.0,
            )
        if name == "one":
            return FSpec(name, lambda pt: 1.0, lambda b: np.ones(len(b)), sup=1.0)
        raise ValueError(f"translation has no spectral function {name!r}")


def _rev16(x):
    """Reverse the low 16 bits (uint64 domain, works on scalars and arrays)."""
    m1 = np.uint64(0x5555)
    m2 = np.uint64(0x3333)
    m4 = np.uint64(0x0F0F)
    x = ((x & m1) << _ONE) | ((x >> _ONE) & m1)
    x = ((x & m2) << np.uint64(2)) | ((x >> np.uint64(2)) & m2)
    x = ((x & m4) << np.uint64(4)) | ((x >> np.uint64(4)) & m4)
    return ((x << np.uint64(8)) | (x >> np.uint64(8))) & np.uint64(0xFFFF)


def _fraction_kernel_numpy(entropy, combo):
    acc = np.zeros(entropy.shape[0], dtype=np.uint64)
    mask16 = np.uint64(0xFFFF)
    for b in range(4):
        r = entropy[:, b]
        idx = r & mask16
        c = combo[idx.astype(np.int64)]
        blk = np.where((r >> np.uint64(16)) < (c >> np.uint64(16)), idx, c & mask16)
        acc |= _rev16(blk) << np.uint64(48 - 16 * b)
    return acc.astype(np.float64) * 2.0**-64


try:
    from numba import njit

    @njit(cache=True)
    def _fraction_kernel_jit(entropy, combo):  # pragma: no cover
        n = entropy.shape[0]
        out = np.empty(n)
        mask16 = np.uint64(0xFFFF)
        m1 = np.uint64(0x5555)
        m2 = np.uint64(0x3333)
        m4 = np.uint64(0x0F0F)
        one = np.uint64(1)
        for i in range(n):
            acc = np.uint64(0)
            for b in range(4):
                r = entropy[i, b]
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
            out[i] = acc * 2.0**-64
        return out

    _fraction_kernel = _fraction_kernel_jit
except ImportError:  # pragma: no cover
    _fraction_kernel = _fraction_kernel_numpy


def make_system(kind: str, **params):
    if kind == "odometer":
        return Odometer(params.get("p", 2.0 / 3.0))
    if kind == "bernoulli":
        return BernoulliShift(params.get("marginal", "uniform"))
    if kind == "translation":
        return GaussianTranslation()
    raise ValueError(f"unknown system kind {kind!r}")
