"""Base-system tests: dyadic arithmetic, exact cocycles, sampling laws."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maharam.systems import (
    BernoulliShift,
    DepthCapExceeded,
    DyadicPoint,
    GaussianTranslation,
    Odometer,
    PackedDyadic,
    _fraction_kernel,
    _fraction_kernel_numpy,
    bitreverse64,
    make_system,
    popcount64,
)
from maharam import rng as rngmod

OD = Odometer(2.0 / 3.0)


def point(bits, p=2.0 / 3.0, seed=0):
    return DyadicPoint.from_bits(bits, p=p, rng=np.random.default_rng(seed))


class TestDyadicArithmetic:
    def test_increment_with_carry(self):
        x = point([1, 1, 0])
        assert OD.apply(x, 1).bits_upto(3) == (0, 0, 1)

    def test_zero_shift_is_identity(self):
        x = point([1, 0, 1])
        assert OD.apply(x, 0) is x

    def test_decrement_borrows(self):
        x = point([0, 1])
        assert OD.apply(x, -1).bits_upto(2) == (1, 0)

    def test_round_trip_many_points(self):
        g = rngmod.substream(3, "diagnostics")
        pts = OD.sample_batch(g, 10_000)
        for m in (1, -1, 5, 1023, -4096):
            back = OD.batch_apply(OD.batch_apply(pts, m), -m)
            assert np.array_equal(back.lo, pts.lo)
            assert np.array_equal(back.hi, pts.hi)

    @given(a=st.integers(-2**20, 2**20), b=st.integers(-2**20, 2**20),
           seed=st.integers(0, 50))
    @settings(max_examples=60, deadline=None)
    def test_group_law(self, a, b, seed):
        x = OD.sample_point(np.random.default_rng(seed))
        lhs = OD.apply(x, a + b)
        rhs = OD.apply(OD.apply(x, a), b)
        depth = max(lhs.materialized_depth(), rhs.materialized_depth())
        assert lhs.bits_upto(depth) == rhs.bits_upto(depth)

    def test_borrow_past_cap_raises(self):
        x = DyadicPoint.from_bits([0] * 8, p=2.0 / 3.0,
                                  rng=np.random.default_rng(1), depth_cap=16)
        x.tail.bits = [0] * 16  # force an all-zero tail up to the cap
        with pytest.raises(DepthCapExceeded):
            OD.apply(x, -1)


class TestStepExponent:
    @pytest.mark.parametrize("bits,expected", [
        ([0], -1),
        ([1, 1, 0], 1),
        ([1, 1, 1, 1, 0], 3),
    ])
    def test_formula(self, bits, expected):
        assert OD.step_exponent(point(bits)) == expected

    def test_packed_matches_object(self):
        g = rngmod.substream(4, "diagnostics")
        pts = OD.sample_batch(g, 2000)
        phis = OD.batch_step_exponent(pts)
        for i in range(50):
            bits = _unpack_bits(pts, i)
            assert OD.step_exponent(point(bits)) == phis[i]


def _unpack_bits(pts: PackedDyadic, i: int, depth: int = 128):
    lo, hi = int(pts.lo[i]), int(pts.hi[i])
    word = lo | (hi << 64)
    return [(word >> k) & 1 for k in range(depth)]


class TestDerivative:
    def test_spec_values(self):
        assert OD.rn(point([1, 1, 0]), 1).value == pytest.approx(0.5, abs=1e-12)
        assert OD.rn(point([0]), 1).value == pytest.approx(2.0, abs=1e-12)
        assert OD.rn(point([1, 0]), 0).value == 1.0

    def test_exact_cylinder_ratio_oracle(self):
        # the derivative must equal the exact rational mass ratio
        # mu(translated cylinder) / mu(cylinder) for cylinders long enough
        # to absorb the carry
        p = Fraction(2, 3)
        lam = (1 - p) / p
        g = np.random.default_rng(11)
        for _ in range(200):
            depth = 24
            bits = [int(b) for b in g.integers(0, 2, depth)]
            bits[-1] = 0  # carry resolves inside the cylinder
            m = int(g.integers(1, 2**16))
            x = point(bits)
            y = OD.apply(x, m)
            e = OD.rn_exponent(x, m)
            mass_x = OD.cylinder_mass(bits)
            mass_y = OD.cylinder_mass(y.bits_upto(depth))
            assert mass_y / mass_x == lam ** e

    def test_dual_methods_agree_exactly(self):
        g = rngmod.substream(5, "diagnostics")
        pts = OD.sample_batch(g, 500)
        for m in (1, -1, 7, -7, 255, 256, -1024, 4096, -4096):
            a = OD.batch_rn_exponent(pts, m, method="bits")
            b = OD.batch_rn_exponent(pts, m, method="steps")
            assert np.array_equal(a, b)

    def test_object_lane_dual_methods(self):
        g = np.random.default_rng(6)
        for _ in range(50):
            x = OD.sample_point(g)
            m = int(g.integers(-300, 300))
            assert OD.rn_exponent(x, m, "bits") == OD.rn_exponent(x, m, "steps")

    def test_chain_rule_exact(self):
        g = rngmod.substream(6, "diagnostics")
        pts = OD.sample_batch(g, 2000)
        for n, m in ((3, 5), (-7, 11), (32, -32), (17, 17)):
            e_nm = OD.batch_rn_exponent(pts, n + m)
            e_n = OD.batch_rn_exponent(pts, n)
            e_m = OD.batch_rn_exponent(OD.batch_apply(pts, n), m)
            assert np.array_equal(e_nm, e_n + e_m)

    def test_inverse_cocycle_identity(self):
        g = np.random.default_rng(8)
        for _ in range(20):
            x = OD.sample_point(g)
            back = OD.apply(x, -1)
            assert OD.rn_exponent(x, -1) == -OD.rn_exponent(back, 1)


class TestBernoulliShift:
    def test_measure_preserving(self):
        sh = BernoulliShift()
        x = sh.sample_point(np.random.default_rng(0))
        assert sh.rn(x, 17).value == 1.0
        assert sh.log_rn(x, -3) == 0.0

    def test_shift_moves_coordinates(self):
        sh = BernoulliShift()
        x = sh.sample_point(np.random.default_rng(1))
        vals = [x.coordinate(k) for k in range(5)]
        y = sh.apply(x, 2)
        assert y.coordinate(0) == vals[2]
        assert sh.apply(y, -2).coordinate(0) == vals[0]

    def test_batch_columns_shift(self):
        sh = BernoulliShift()
        g = rngmod.substream(2, "diagnostics")
        b = sh.sample_batch(g, 100, offsets=(0, 3))
        moved = sh.batch_apply(b, 3)
        assert np.array_equal(moved.column(0), b.column(3))

    def test_missing_column_raises(self):
        sh = BernoulliShift()
        b = sh.sample_batch(rngmod.substream(2, "diagnostics"), 10, offsets=(0,))
        with pytest.raises(KeyError):
            b.column(5)


class TestGaussianTranslation:
    def test_log_rn_matches_density_ratio(self):
        from scipy.stats import norm
        tr = GaussianTranslation()
        g = np.random.default_rng(3)
        for _ in range(50):
            x = tr.sample_point(g)
            n = int(g.integers(-10, 11))
            expect = norm.logpdf(x + n) - norm.logpdf(x)
            assert tr.log_rn(x, n) == pytest.approx(expect, abs=1e-10)

    def test_chain_rule(self):
        tr = GaussianTranslation()
        g = rngmod.substream(9, "diagnostics")
        b = tr.sample_batch(g, 1000)
        for n, m in ((2, 3), (-5, 9), (12, -12)):
            lhs = tr.batch_log_rn(b, n + m)
            rhs = tr.batch_log_rn(b, n) + tr.batch_log_rn(tr.batch_apply(b, n), m)
            assert np.max(np.abs(lhs - rhs)) < 1e-10


class TestSampling:
    def test_first_bit_frequency(self):
        g = rngmod.substream(1, "diagnostics")
        pts = OD.sample_batch(g, 100_000)
        ones = float(np.mean((pts.lo & np.uint64(1)).astype(float)))
        se = math.sqrt((2 / 3) * (1 / 3) / 100_000)
        assert abs(ones - 2 / 3) < 4 * se

    def test_parameter_domain(self):
        with pytest.raises(ValueError):
            Odometer(1.0)
        with pytest.raises(ValueError):
            Odometer(0.5)

    def test_fixed_seed_reproducible(self):
        a = OD.sample_batch(rngmod.substream(7, "base_points"), 1000)
        b = OD.sample_batch(rngmod.substream(7, "base_points"), 1000)
        assert np.array_equal(a.lo, b.lo) and np.array_equal(a.hi, b.hi)
        x = OD.sample_point(np.random.default_rng(42))
        y = OD.sample_point(np.random.default_rng(42))
        assert x.bits_upto(64) == y.bits_upto(64)


class TestBitKernels:
    def test_popcount_and_reverse(self):
        vals = np.array([0, 1, 0xFFFFFFFFFFFFFFFF, 0x8000000000000000, 12345],
                        dtype=np.uint64)
        assert list(popcount64(vals)) == [bin(int(v)).count("1") for v in vals]
        rev = bitreverse64(vals)
        for v, r in zip(vals, rev):
            assert int(r) == int(f"{int(v):064b}"[::-1], 2)

    def test_fraction_matches_bit_sum(self):
        g = rngmod.substream(8, "diagnostics")
        pts = OD.sample_batch(g, 200)
        frac = Odometer.batch_fraction(pts)
        for i in range(20):
            bits = _unpack_bits(pts, i, 64)
            exact = sum(b << (63 - k) for k, b in enumerate(bits))
            assert frac[i] == np.float64(exact) * 2.0**-64

    def test_alias_sampler_law(self):
        g = rngmod.substream(9, "diagnostics")
        x = OD.sample_fraction_batch(g, 400_000)
        p = 2.0 / 3.0
        m = p * (1 - 2.0**-64)
        v = p * (1 - p) / 3.0
        assert abs(x.mean() - m) < 4 * math.sqrt(v / len(x))
        from scipy.stats import ks_2samp
        direct = Odometer.batch_fraction(
            OD.sample_batch(rngmod.substream(10, "diagnostics"), 200_000))
        assert ks_2samp(x[:200_000], direct).pvalue > 0.01

    def test_alias_kernels_identical(self):
        combo = OD._alias_table()
        e = np.random.default_rng(5).integers(0, 1 << 64, size=(50_000, 4),
                                              dtype=np.uint64)
        assert np.array_equal(_fraction_kernel(e, combo),
                              _fraction_kernel_numpy(e, combo))

    def test_spectral_function_lanes_agree(self):
        g = rngmod.substream(12, "diagnostics")
        pts = OD.sample_batch(g, 64)
        for name in ("binary_fraction", "first_bit"):
            f = OD.spectral_function(name)
            batch_vals = f.batch(pts)
            for i in range(10):
                obj = point(_unpack_bits(pts, i, 64))
                assert f.point(obj) == batch_vals[i]


def test_make_system():
    assert make_system("odometer", p=0.7).p == 0.7
    assert make_system("bernoulli").marginal == "uniform"
    assert make_system("translation").kind == "translation"
    with pytest.raises(ValueError):
        make_system("rotation")
