"""Jet algebra against the naive polynomial reference, plus order bookkeeping."""

from fractions import Fraction

import pytest

import polyref as ref
from folglue.prng import SplitMix
from folglue.rings import FpRing, QQ, RingMismatchError
from folglue.series import (
    BiSeries,
    DegreeBand,
    OrderError,
    compose_sharp,
    monomials_up_to,
    mul_poly,
    mul_sharp,
)


def q(n, d=1):
    return Fraction(n, d)


def from_ref(p, order, ring=QQ):
    return BiSeries(ring, order, {k: c for k, c in p.items() if k[0] + k[1] <= order})


def random_poly(rng, max_deg, *, min_deg=0):
    out = {}
    for i in range(max_deg + 1):
        for j in range(max_deg + 1 - i):
            if i + j < min_deg:
                continue
            if rng.below(3) == 0:
                c = Fraction(rng.int_in(-9, 9), rng.int_in(1, 4))
                if c:
                    out[(i, j)] = c
    return out


class TestConstructors:
    def test_zero_pruning(self):
        s = BiSeries(QQ, 3, {(1, 0): q(0), (0, 1): q(2)})
        assert set(s.support()) == {(0, 1)}

    def test_order_guard(self):
        with pytest.raises(OrderError):
            BiSeries(QQ, 2, {(2, 1): q(1)})
        with pytest.raises(ValueError):
            BiSeries(QQ, 2, {(-1, 0): q(1)})

    def test_from_terms_merges(self):
        s = BiSeries.from_terms(QQ, 4, [(1, 1, q(2)), (1, 1, q(-2)), (2, 0, q(5))])
        assert set(s.support()) == {(2, 0)}

    def test_coeff_access(self):
        s = BiSeries(QQ, 3, {(1, 2): q(7)})
        assert s.coeff(1, 2) == 7
        assert s.coeff(0, 0) == 0
        with pytest.raises(OrderError):
            s.coeff(2, 2)


class TestOrderBookkeeping:
    def test_add_takes_min_order(self):
        a = BiSeries(QQ, 5, {(0, 0): q(1)})
        b = BiSeries(QQ, 3, {(0, 0): q(1)})
        assert (a + b).order == 3

    def test_mul_takes_min_order(self):
        a = BiSeries(QQ, 5, {(1, 0): q(1)})
        b = BiSeries(QQ, 3, {(0, 1): q(1)})
        assert (a * b).order == 3

    def test_jet_never_extends(self):
        s = BiSeries(QQ, 3, {(1, 0): q(1)})
        with pytest.raises(OrderError):
            s.jet(4)
        assert s.jet(3) is s

    def test_padded_extends_with_zeros(self):
        s = BiSeries(QQ, 2, {(1, 0): q(1)})
        t = s.padded(5)
        assert t.order == 5 and t.coeff(1, 0) == 1 and t.coeff(2, 2) == 0
        with pytest.raises(OrderError):
            s.padded(1)

    def test_partials_drop_one_order(self):
        s = BiSeries(QQ, 4, {(2, 1): q(3)})
        assert s.partial_x().order == 3
        assert s.partial_x().coeff(1, 1) == 6
        assert s.partial_y().coeff(2, 0) == 3

    def test_shifted_raises_order(self):
        s = BiSeries(QQ, 2, {(1, 1): q(1)})
        t = s.shifted(2, 1)
        assert t.order == 5 and t.coeff(3, 2) == 1

    def test_band(self):
        s = BiSeries(QQ, 4, {(0, 0): q(1), (1, 1): q(2), (3, 1): q(3)})
        b = s.band(DegreeBand(1, 4))
        assert set(b.support()) == {(1, 1), (3, 1)}
        with pytest.raises(OrderError):
            s.band(DegreeBand(1, 5))

    def test_order_of_vanishing(self):
        assert BiSeries.zero(QQ, 3).order_of_vanishing() is None
        s = BiSeries(QQ, 5, {(2, 1): q(1), (0, 4): q(2)})
        assert s.order_of_vanishing() == 3

    def test_ring_mismatch(self):
        a = BiSeries(QQ, 2, {(0, 0): q(1)})
        b = BiSeries.constant(FpRing(5), 2, FpRing(5).from_int(1))
        with pytest.raises(RingMismatchError):
            a + b


class TestAgainstReference:
    def test_mul_random(self):
        rng = SplitMix(301)
        for _ in range(40):
            p = random_poly(rng, 5)
            r = random_poly(rng, 5)
            n = rng.int_in(2, 6)
            got = from_ref(p, n) * from_ref(r, n)
            want = ref.ptruncate(ref.pmul(p, r), n)
            assert got.coeffs == want

    def test_compose_random(self):
        rng = SplitMix(302)
        for _ in range(25):
            f = random_poly(rng, 4)
            u = random_poly(rng, 4, min_deg=1)
            v = random_poly(rng, 4, min_deg=1)
            n = rng.int_in(2, 5)
            got = from_ref(f, n).compose(from_ref(u, n), from_ref(v, n))
            want = ref.ptruncate(ref.pcompose(f, u, v), n)
            assert got.coeffs == want

    def test_compose_requires_no_constant_term(self):
        f = BiSeries(QQ, 3, {(1, 0): q(1)})
        u = BiSeries(QQ, 3, {(0, 0): q(1)})
        v = BiSeries.variable_y(QQ, 3)
        with pytest.raises(ValueError):
            f.compose(u, v)

    def test_compose_with_identity(self):
        rng = SplitMix(303)
        for _ in range(10):
            f = random_poly(rng, 5)
            n = 5
            s = from_ref(f, n)
            x = BiSeries.variable_x(QQ, n)
            y = BiSeries.variable_y(QQ, n)
            assert s.compose(x, y) == s

    def test_partials_random(self):
        rng = SplitMix(304)
        for _ in range(20):
            p = random_poly(rng, 6)
            s = from_ref(p, 6)
            assert s.partial_x().coeffs == ref.ptruncate(ref.pdx(p), 5)
            assert s.partial_y().coeffs == ref.ptruncate(ref.pdy(p), 5)

    def test_frozen_compose_example(self):
        # (x + y^2) o (u, v) with u = x, v = y + x^2, truncated at order 3:
        # x + (y + x^2)^2 = x + y^2 + 2 x^2 y + x^4 -> x + y^2 + 2 x^2 y
        f = BiSeries(QQ, 3, {(1, 0): q(1), (0, 2): q(1)})
        u = BiSeries.variable_x(QQ, 3)
        v = BiSeries(QQ, 3, {(0, 1): q(1), (2, 0): q(1)})
        got = f.compose(u, v)
        assert got.coeffs == {(1, 0): 1, (0, 2): 1, (2, 1): 2}

    def test_mul_over_fp(self):
        rng = SplitMix(305)
        R = FpRing(32003)
        for _ in range(10):
            p = random_poly(rng, 4)
            r = random_poly(rng, 4)
            n = 4
            sq = from_ref(p, n) * from_ref(r, n)
            sp = from_ref(p, n, QQ).map_coefficients(
                lambda c: R.from_int(c.numerator) / R.from_int(c.denominator), R
            ) * from_ref(r, n, QQ).map_coefficients(
                lambda c: R.from_int(c.numerator) / R.from_int(c.denominator), R
            )
            for k, c in sq.coeffs.items():
                assert sp.coeff(*k) * c.denominator == c.numerator


class TestMulPoly:
    def test_exact_bound(self):
        s = BiSeries(QQ, 2, {(0, 0): q(1), (1, 0): q(1)})
        out = mul_poly(s, {(2, 0): q(3)}, 4)
        assert out.order == 4
        assert out.coeffs == {(2, 0): 3, (3, 0): 3}
        with pytest.raises(OrderError):
            mul_poly(s, {(2, 0): q(3)}, 5)

    def test_matches_reference_inside_bound(self):
        rng = SplitMix(306)
        for _ in range(20):
            p = random_poly(rng, 5)
            r = random_poly(rng, 4, min_deg=2)
            if not r:
                continue
            n = 5
            min_deg = min(i + j for (i, j) in r)
            out = mul_poly(from_ref(p, n), r, n + min_deg)
            want = ref.ptruncate(ref.pmul(p, r), n + min_deg)
            assert out.coeffs == want


class TestMulSharp:
    def test_order_formula(self):
        a = BiSeries(QQ, 5, {(2, 0): q(1)})
        b = BiSeries(QQ, 4, {(1, 2): q(1)})
        assert mul_sharp(a, b).order == min(5 + 3, 4 + 2)
        z = BiSeries.zero(QQ, 3)
        out = mul_sharp(z, b)
        assert out.is_zero() and out.order == 3 + 3

    def test_sound_under_every_tail(self):
        # visible jets multiplied sharply must agree with the true product
        # for arbitrary tails hidden above the working orders
        rng = SplitMix(320)
        for _ in range(30):
            ka = rng.below(3)
            kb = rng.below(3)
            a_vis = random_poly(rng, 4, min_deg=ka)
            b_vis = random_poly(rng, 5, min_deg=kb)
            out = mul_sharp(from_ref(a_vis, 4), from_ref(b_vis, 5))
            for _tails in range(3):
                a_true = ref.padd(a_vis, random_poly(rng, 7, min_deg=5))
                b_true = ref.padd(b_vis, random_poly(rng, 8, min_deg=6))
                want = ref.ptruncate(ref.pmul(a_true, b_true), out.order)
                assert out.coeffs == want

    def test_beats_naive_order(self):
        a = BiSeries(QQ, 4, {(0, 2): q(1), (0, 4): q(-3)})
        b = BiSeries(QQ, 4, {(3, 0): q(2)})
        assert mul_sharp(a, b).order == 4 + 2
        assert (a * b).order == 4


class TestComposeSharp:
    def test_sound_under_every_tail(self):
        rng = SplitMix(321)
        for _ in range(20):
            f_vis = random_poly(rng, 4, min_deg=rng.below(3))
            u_vis = random_poly(rng, 3, min_deg=1)
            v_vis = random_poly(rng, 3, min_deg=1)
            out = compose_sharp(from_ref(f_vis, 4), from_ref(u_vis, 3), from_ref(v_vis, 3))
            for _tails in range(3):
                f_true = ref.padd(f_vis, random_poly(rng, 6, min_deg=5))
                u_true = ref.padd(u_vis, random_poly(rng, 5, min_deg=4))
                v_true = ref.padd(v_vis, random_poly(rng, 5, min_deg=4))
                want = ref.ptruncate(ref.pcompose(f_true, u_true, v_true), out.order)
                assert out.coeffs == want

    def test_gains_from_vanishing(self):
        # f vanishing to 3 composed with substitutions vanishing to 2:
        # tails of u, v are multiplied by partials vanishing to (3-1)*2
        f = BiSeries(QQ, 4, {(3, 0): q(1)})
        u = BiSeries(QQ, 5, {(0, 2): q(1)})
        v = BiSeries(QQ, 5, {(2, 0): q(1), (0, 3): q(1)})
        out = compose_sharp(f, u, v)
        assert out.order == min((4 + 1) * 2 - 1, 5 + 2 * 2, 5 + 2 * 2)

    def test_constant_substitution_rejected(self):
        f = BiSeries(QQ, 3, {(1, 0): q(1)})
        u = BiSeries(QQ, 3, {(0, 0): q(1)})
        with pytest.raises(ValueError):
            compose_sharp(f, u, BiSeries.zero(QQ, 3))


def test_monomials_up_to():
    assert monomials_up_to(2) == [(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)]
    assert len(monomials_up_to(7)) == 9 * 8 // 2
