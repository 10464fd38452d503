"""Jacobian assembly and rank certificates, checked against closed forms.

The leading-degree rows of the band columns collapse to formulas in the
leading form data alone:

  rescale direction H (degree N):
      (nu+1) H (lead1 ^ lead2)  +  (x P1 + y Q1) (dH ^ lead2)
  shear direction g = x^i y^(N+1-i) at radial leading data H_i (x dy - y dx):
      -N * y * g * H1 * H2 * dx ^ dy

Both are derived independently of the engine and realized here on plain
coefficient dicts through the reference polynomial routines, then held
against the assembled blocks entry by entry.  The product-rule fast path
is additionally pinned to the dual-number evaluation column by column.
"""

import json
from fractions import Fraction

import pytest

from folglue.certify import (
    CERT_PRIMES,
    JacobianBlock,
    Linearization,
    block_from_columns,
    build_jacobian,
    dim_fol_jets,
    estimate_N1,
    estimate_n1,
    exact_rank,
    omega_slots,
    phi_slots,
    rank_growth_check,
    rescale_columns,
    shear_columns,
)
from folglue.families import sample_z_point
from folglue.forms import OneFormJet, leading_pair_parametrize, radial_test
from folglue.germs import DiffeoJet
from folglue.linalg import rank_exact_qq
from folglue.prng import SplitMix, derive
from folglue.rings import QQ, FpRing
from folglue.series import BiSeries, OrderError, monomials_up_to
from polyref import padd, pdx, pdy, pmul, pneg, pscale


def q(n, d=1):
    return Fraction(n, d)


def leading_tables(w, nu):
    lead = w.homogeneous_part(nu)
    return dict(lead.P.coeffs), dict(lead.Q.coeffs)


def exact_degree_rows(deg):
    return [m for m in monomials_up_to(deg) if sum(m) == deg]


def rescale_oracle_matrix(l1, l2, N, nu):
    """Leading rows of the rescale family from the two-term closed form."""
    rows = exact_degree_rows(N + 2 * nu)
    contraction = padd(
        pmul({(1, 0): q(1)}, l1[0]), pmul({(0, 1): q(1)}, l1[1])
    )
    wedge12 = padd(pmul(l1[0], l2[1]), pneg(pmul(l1[1], l2[0])))
    cols = []
    for alpha in range(N + 1):
        h = {(alpha, N - alpha): q(1)}
        dh_wedge = padd(pmul(pdx(h), l2[1]), pneg(pmul(pdy(h), l2[0])))
        cols.append(
            padd(pscale(pmul(h, wedge12), q(nu + 1)), pmul(contraction, dh_wedge))
        )
    return [[c.get(m, q(0)) for c in cols] for m in rows]


def shear_oracle_matrix(h1, h2, N, nu):
    """Leading rows of the shear family at radial leading data."""
    rows = exact_degree_rows(N + 2 * nu)
    mult = pmul({(0, 1): q(1)}, pmul(h1, h2))
    cols = []
    for i in range(N + 2):
        g = {(i, N + 1 - i): q(1)}
        cols.append(pscale(pmul(g, mult), q(-N)))
    return [[c.get(m, q(0)) for c in cols] for m in rows]


def as_lists(block):
    return [list(row) for row in block.entries]


class TestDims:
    def test_examples(self):
        assert dim_fol_jets(0, 0, 0) == 4
        assert dim_fol_jets(1, 1, 1) == 8
        assert dim_fol_jets(0, 1, 0) == 0

    def test_increment_is_constant_past_both_bounds(self):
        for k in range(4):
            for nu in range(3):
                start = max(k, nu)
                for M in range(start, 12):
                    step = dim_fol_jets(k, nu, M + 1) - dim_fol_jets(k, nu, M)
                    assert step == 4 * k + 4

    def test_empty_below_vanishing_order(self):
        assert dim_fol_jets(2, 3, 2) == 0

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            dim_fol_jets(-1, 0, 3)
        with pytest.raises(ValueError):
            dim_fol_jets(0, 0, -2)


class TestSlots:
    def test_phi_slot_count(self):
        for d in range(2, 7):
            slots = phi_slots(d)
            assert len(slots) == 2 * (d + 1)
            assert all(i + j == d for (_, _, i, j) in slots)

    def test_phi_floor(self):
        with pytest.raises(ValueError):
            phi_slots(1)

    def test_omega_chart_bounds(self):
        for k in range(3):
            for d in range(6):
                s1 = omega_slots(1, k, d)
                s2 = omega_slots(2, k, d)
                assert len(s1) == len(s2) == 2 * (min(d, k) + 1)
                assert all(i <= k for (_, _, i, j) in s1)
                assert all(j <= k for (_, _, i, j) in s2)

    def test_bad_which(self):
        with pytest.raises(ValueError):
            omega_slots(3, 1, 2)


def random_series(ring, order, rng, lo=0):
    terms = {}
    for d in range(lo, order + 1):
        for i in range(d + 1):
            if rng.below(2):
                c = ring.from_int(rng.int_in(-3, 3))
                if c:
                    terms[(i, d - i)] = c
    terms.setdefault((lo, 0), ring.one())
    return BiSeries(ring, order, terms)


def random_base(seed, t_order=5, f_order=5):
    """Arbitrary (not flat) base point with untagged forms."""
    rng = SplitMix(seed)
    a = {}
    b = {}
    for d in range(2, t_order + 1):
        for i in range(d + 1):
            if rng.below(3) == 0:
                a[(i, d - i)] = QQ.from_int(rng.int_in(-2, 2))
            if rng.below(3) == 0:
                b[(i, d - i)] = QQ.from_int(rng.int_in(-2, 2))
    t = DiffeoJet.from_perturbation(QQ, t_order, a, b)
    w1 = OneFormJet(random_series(QQ, f_order, rng), random_series(QQ, f_order, rng))
    w2 = OneFormJet(random_series(QQ, f_order, rng), random_series(QQ, f_order, rng))
    return t, w1, w2


class TestEngineAgreement:
    """The product-rule columns must equal the dual-number derivative."""

    def test_fast_matches_dual_on_random_bases(self):
        cols = phi_slots(2) + phi_slots(3) + phi_slots(4)
        for which in (1, 2):
            for d in range(3):
                cols += omega_slots(which, 9, d)
        for seed in range(5):
            base = random_base(seed)
            fast = build_jacobian(base, 3, cols, engine="fast")
            dual = build_jacobian(base, 3, cols, engine="dual")
            assert fast.rows == dual.rows
            assert as_lists(fast) == as_lists(dual)

    def test_fast_matches_dual_on_flat_base(self):
        z = sample_z_point(QQ, 1, 1, 4, 3, SplitMix(77))
        cols = phi_slots(2) + phi_slots(3)
        for which in (1, 2):
            cols += omega_slots(which, 1, 1) + omega_slots(which, 1, 2)
        fast = build_jacobian(z, 3, cols, engine="fast")
        dual = build_jacobian(z, 3, cols, engine="dual")
        assert as_lists(fast) == as_lists(dual)

    def test_unknown_engine(self):
        with pytest.raises(ValueError):
            build_jacobian(random_base(0), 2, phi_slots(2), engine="float")


class TestBlockShape:
    def test_row_enumeration(self):
        base = random_base(11)
        block = build_jacobian(base, 4, phi_slots(2))
        assert len(block.rows) == 5 * 6 // 2
        assert block.shape == (15, 6)

    def test_leading_rows_slice(self):
        base = random_base(12)
        block = build_jacobian(base, 4, phi_slots(2))
        lead = block.leading_rows(4)
        assert all(i + j == 4 for (i, j) in lead.rows)
        assert len(lead.rows) == 5
        assert lead.cols == block.cols

    def test_short_column_rejected(self):
        s = BiSeries.monomial(QQ, 3, 1, 1)
        with pytest.raises(OrderError):
            block_from_columns(["only"], [s], 5, QQ)

    def test_degree_one_transition_slot_rejected(self):
        base = random_base(13)
        lin = Linearization(*base)
        with pytest.raises(ValueError):
            lin.column(("phi", "a", 1, 0))


class TestShearOracle:
    """Shear columns at radial leading data against -N y g H1 H2."""

    @pytest.mark.parametrize("N", range(1, 7))
    @pytest.mark.parametrize("knu", [(1, 1), (2, 2)])
    def test_leading_block_and_rank(self, N, knu):
        k, nu = knu
        z = sample_z_point(
            QQ, k, nu, N + 1, N + nu, derive(901, "shear", k, nu, N), family="radial"
        )
        fact = leading_pair_parametrize(
            z.w1.homogeneous_part(nu), z.w2.homogeneous_part(nu)
        )
        assert fact.eta == ({(0, 1): q(-1)}, {(1, 0): q(1)})
        lin = Linearization(z.transition, z.w1, z.w2)
        labels, series = shear_columns(lin, N)
        block = block_from_columns(labels, series, N + 2 * nu, QQ).leading_rows(
            N + 2 * nu
        )
        assert as_lists(block) == shear_oracle_matrix(fact.H1, fact.H2, N, nu)
        assert rank_exact_qq(as_lists(block)) == N + 2


class TestRescaleOracle:
    """Rescale columns against the contraction formula, plus kernel bound."""

    @pytest.mark.parametrize("N", range(2, 6))
    @pytest.mark.parametrize(
        "knu,family",
        [((0, 1), "linear"), ((0, 1), "graph"), ((1, 2), "linear"), ((2, 2), "graph")],
    )
    def test_leading_block_and_kernel(self, N, knu, family):
        k, nu = knu
        z = sample_z_point(
            QQ, k, nu, N + 1, N + nu, derive(902, "rescale", k, nu, N), family=family
        )
        lead1 = z.w1.homogeneous_part(nu)
        assert radial_test(lead1, nu) == "nonradial"
        l1 = leading_tables(z.w1, nu)
        l2 = leading_tables(z.w2, nu)
        lin = Linearization(z.transition, z.w1, z.w2)
        labels, series = rescale_columns(lin, N)
        block = block_from_columns(labels, series, N + 2 * nu, QQ).leading_rows(
            N + 2 * nu
        )
        assert as_lists(block) == rescale_oracle_matrix(l1, l2, N, nu)
        rank = rank_exact_qq(as_lists(block))
        assert len(labels) - rank <= 1

    def test_slice_ignores_the_transition(self):
        # the leading rows see only the leading form data, so two flat
        # points sharing forms but not transitions give the same slice
        nu, N = 1, 3
        z = sample_z_point(QQ, 0, nu, N + 1, N + nu, derive(903, "slice"))
        other = DiffeoJet.identity(QQ, N + 1)
        blocks = []
        for t in (z.transition, other):
            lin = Linearization(t, z.w1, z.w2)
            labels, series = rescale_columns(lin, N)
            blocks.append(
                block_from_columns(labels, series, N + 2 * nu, QQ).leading_rows(
                    N + 2 * nu
                )
            )
        assert as_lists(blocks[0]) == as_lists(blocks[1])


class TestExactRank:
    def known_rank_matrix(self):
        # rank 3 by construction: three independent rows plus combinations
        r1 = [q(1), q(0), q(2), q(-1)]
        r2 = [q(0), q(1), q(1), q(3)]
        r3 = [q(2), q(0), q(0), q(1)]
        r4 = [a + b for a, b in zip(r1, r2)]
        r5 = [a - 3 * b for a, b in zip(r3, r1)]
        return [r1, r2, r3, r4, r5]

    def block_of(self, rows, ring=QQ):
        return JacobianBlock(
            tuple((i, 0) for i in range(len(rows))),
            tuple(range(len(rows[0]) if rows else 0)),
            tuple(tuple(r) for r in rows),
            ring,
        )

    def test_qq_and_modular_agree(self):
        block = self.block_of(self.known_rank_matrix())
        viaq = exact_rank(block, "qq")
        viap = exact_rank(block, "modular")
        assert viaq.rank == viap.rank == 3
        assert viaq.method == "qq"
        assert viap.method == "modular"
        assert viap.consensus and viap.per_prime == (3, 3, 3)
        assert viap.primes == CERT_PRIMES

    def test_auto_picks_by_size(self):
        block = self.block_of(self.known_rank_matrix())
        assert exact_rank(block, "auto").method == "qq"
        wide = self.block_of([[q(i * j + 1) for j in range(60)] for i in range(40)])
        assert exact_rank(wide, "auto").method == "modular"

    def test_bad_prime_skipped_without_consensus(self):
        rows = self.known_rank_matrix()
        rows[0] = [c / CERT_PRIMES[0] for c in rows[0]]
        report = exact_rank(self.block_of(rows), "modular")
        assert report.primes == CERT_PRIMES[1:]
        assert report.rank == 3
        assert not report.consensus

    def test_fp_native(self):
        p = 32003
        ring = FpRing(p)
        rows = [
            [ring.from_int(1), ring.from_int(2)],
            [ring.from_int(2), ring.from_int(4)],
        ]
        report = exact_rank(self.block_of(rows, ring))
        assert report.rank == 1
        assert report.method == "modular"
        assert report.primes == (p,)

    def test_empty_edges(self):
        assert exact_rank(self.block_of([]), "qq").rank == 0
        tall = JacobianBlock(((0, 0), (1, 0)), (), ((), ()), QQ)
        assert exact_rank(tall, "modular").rank == 0

    def test_unknown_strategy(self):
        with pytest.raises(ValueError):
            exact_rank(self.block_of(self.known_rank_matrix()), "float")


class TestRankGrowthCheck:
    def test_mixed_type_confirmed(self):
        cert = rank_growth_check(1, 1, 2, samples=8, seed=31)
        assert cert["verdict"] == "confirmed"
        assert cert["kind"] == "rank_growth"
        assert len(cert["samples"]) == 8
        for rec in cert["samples"]:
            assert rec["ok"]
            if rec["shape"] == "radial":
                assert rec["rank"] == rec["required"] == 4
            else:
                assert rec["rank"] >= rec["required"] == 2
        json.dumps(cert)

    def test_no_chart_bound_type(self):
        cert = rank_growth_check(0, 1, 3, samples=6, seed=32)
        assert cert["verdict"] == "confirmed"
        assert all(rec["shape"] == "nonradial" for rec in cert["samples"])

    def test_replayable(self):
        one = rank_growth_check(1, 1, 2, samples=4, seed=33)
        two = rank_growth_check(1, 1, 2, samples=4, seed=33)
        assert one == two

    def test_degree_floor(self):
        with pytest.raises(ValueError):
            rank_growth_check(0, 1, 0, samples=1, seed=1)


class TestEstimateN1:
    def test_structure_and_replay(self):
        got = estimate_n1(0, 1, max_N=12, samples=2, seed=41)
        assert got["kind"] == "N1_estimate"
        assert got["verdict"] == "reached"
        N1 = got["N1"]
        assert got == estimate_n1(0, 1, max_N=12, samples=2, seed=41)
        evidence = got["evidence"]
        assert [e["N"] for e in evidence] == list(range(1, N1 + 1))
        for entry in evidence[:-1]:
            assert any(r <= entry["dim"] for r in entry["ranks"])
        last = evidence[-1]
        assert all(r > last["dim"] for r in last["ranks"])
        assert last["dim"] == dim_fol_jets(0, 1, N1 + 1)
        json.dumps(got)

    def test_not_reached_reports_honestly(self):
        got = estimate_n1(0, 1, max_N=2, samples=2, seed=42)
        assert got["verdict"] == "not_reached"
        assert got["N1"] is None
        assert len(got["evidence"]) == 2

    def test_alias_is_the_same_callable(self):
        assert estimate_N1 is estimate_n1
