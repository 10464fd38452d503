"""Jacobian blocks and certified ranks for the gluing residual.

Degree-by-degree solvability of E = 0 is governed by the rank of the
residual's linearization in the transition and form slots.  This module
assembles those Jacobians exactly, computes ranks over the rationals or
over a panel of primes, and packages the two sampled-evidence reports the
package's headline claims rest on: the per-point rank contribution of the
newest transition band, and the first order at which the linearization's
rank outruns the dimension of form pairs.

Soundness directions worth keeping straight:

* a rank mod p never exceeds the rational rank, so any modular value is a
  certified lower bound, and that is the only direction the inequalities
  below consume;
* column series carry the order through which they are certified, and the
  block builder refuses rows beyond it rather than silently zero-filling.

Column assembly is a product-rule linearization with one precompute per
base point; the dual-number evaluation in compat stays the semantic
reference and the test suite holds the two paths equal column by column.
"""

from dataclasses import dataclass
from fractions import Fraction

from .compat import dE_omega, dE_phi
from .families import feasible_families, sample_z_point
from .forms import HomVectorField, OneFormJet, leading_pair_parametrize, radial_test
from .germs import DiffeoJet
from .linalg import fractions_mod_p, rank_exact_qq, rank_mod_p
from .prng import derive
from .rings import QQ, FpRing, Ring
from .series import BiSeries, OrderError, compose_sharp, monomials_up_to, mul_sharp

CERT_PRIMES = (32003, 65521, 1000003)


def dim_fol_jets(k: int, nu: int, order: int) -> int:
    """Parameter count of form pairs through the given total degree.

    Per chart and per component, the degree-n slot carries min(n, k) + 1
    monomials under the chart bound, alive for n >= nu; two components and
    two charts give the factor 4.  Increments are exactly 4k + 4 once the
    degree clears both k and nu.
    """
    if k < 0 or nu < 0 or order < 0:
        raise ValueError("type data and order must be nonnegative")
    return 4 * sum(min(n, k) + 1 for n in range(nu, order + 1))


def phi_slots(degree: int) -> list[tuple]:
    """Unit transition directions at one homogeneous degree."""
    if degree < 2:
        raise ValueError("transition slots start at degree 2")
    return [
        ("phi", comp, i, degree - i) for comp in ("a", "b") for i in range(degree + 1)
    ]


def omega_slots(which: int, k: int, degree: int) -> list[tuple]:
    """Unit form directions at one homogeneous degree under the chart bound."""
    if which not in (1, 2):
        raise ValueError("form slot index must be 1 or 2")
    out = []
    for comp in ("P", "Q"):
        for i in range(degree + 1):
            j = degree - i
            if (i if which == 1 else j) <= k:
                out.append((f"w{which}", comp, i, j))
    return out


class Linearization:
    """Residual derivative columns at a fixed base point.

    The derivative along a unit direction in any slot is a short
    combination of precomputed series and monomial shifts:

      transition, first component g = x^i y^j:
          g*S_a + g_x*(c1P*Q2) - g_y*(c1P*P2)
      transition, second component: same with S_b and c1Q,
      first form: phi^i psi^j times the wedge factors U or V,
      second form: a shift of the pulled-back pair, with the sign of the
          wedge.

    Here c1P, c1Q are the first form's components composed with the
    transition, U = phi_x Q2 - phi_y P2, V = psi_x Q2 - psi_y P2, and
    S_a = c1Px*U + c1Qx*V collects the chain-rule terms.  All products go
    through mul_sharp so vanishing orders push the certified order of each
    column high enough for the leading-degree rows.
    """

    def __init__(self, transition: DiffeoJet, w1: OneFormJet, w2: OneFormJet):
        self.ring: Ring = transition.phi.ring
        self.transition = transition
        self.w1, self.w2 = w1, w2
        phi, psi = transition.phi, transition.psi
        self._phi, self._psi = phi, psi
        px, py = phi.partial_x(), phi.partial_y()
        sx, sy = psi.partial_x(), psi.partial_y()
        c1p = compose_sharp(w1.P, phi, psi)
        c1q = compose_sharp(w1.Q, phi, psi)
        c1px = compose_sharp(w1.P.partial_x(), phi, psi)
        c1py = compose_sharp(w1.P.partial_y(), phi, psi)
        c1qx = compose_sharp(w1.Q.partial_x(), phi, psi)
        c1qy = compose_sharp(w1.Q.partial_y(), phi, psi)
        self._u = mul_sharp(px, w2.Q) - mul_sharp(py, w2.P)
        self._v = mul_sharp(sx, w2.Q) - mul_sharp(sy, w2.P)
        self._sa = mul_sharp(c1px, self._u) + mul_sharp(c1qx, self._v)
        self._sb = mul_sharp(c1py, self._u) + mul_sharp(c1qy, self._v)
        self._t1 = mul_sharp(c1p, w2.Q)
        self._t2 = mul_sharp(c1p, w2.P)
        self._t3 = mul_sharp(c1q, w2.Q)
        self._t4 = mul_sharp(c1q, w2.P)
        self._pulled_p = mul_sharp(c1p, px) + mul_sharp(c1q, sx)
        self._pulled_q = mul_sharp(c1p, py) + mul_sharp(c1q, sy)
        self._powers: dict[tuple[int, int], BiSeries] = {}

    def _power(self, i: int, j: int) -> BiSeries:
        """phi^i psi^j, cached; this is the pullback of the monomial x^i y^j."""
        key = (i, j)
        got = self._powers.get(key)
        if got is None:
            if i == 0 and j == 0:
                got = BiSeries.constant(self.ring, self._u.order, self.ring.one())
            elif i > 0:
                got = mul_sharp(self._power(i - 1, j), self._phi)
            else:
                got = mul_sharp(self._power(0, j - 1), self._psi)
            self._powers[key] = got
        return got

    def column(self, slot: tuple) -> BiSeries:
        kind, comp, i, j = slot
        if kind == "phi":
            if i + j < 2:
                raise ValueError("transition directions start at degree 2")
            if comp == "a":
                s, hi, lo = self._sa, self._t1, self._t2
            else:
                s, hi, lo = self._sb, self._t3, self._t4
            col = s.shifted(i, j)
            if i:
                col = col + hi.shifted(i - 1, j, self.ring.from_int(i))
            if j:
                col = col + lo.shifted(i, j - 1, self.ring.from_int(-j))
            return col
        if kind == "w1":
            return mul_sharp(self._power(i, j), self._u if comp == "P" else self._v)
        if kind == "w2":
            if comp == "P":
                return -self._pulled_q.shifted(i, j)
            return self._pulled_p.shifted(i, j)
        raise ValueError(f"unknown slot kind {kind!r}")


@dataclass(frozen=True)
class JacobianBlock:
    """Scalar matrix of residual-derivative coefficients.

    rows are 2-form coefficient monomials, cols the parameter slot labels;
    entries[r][c] is the row monomial's coefficient in column c.
    """

    rows: tuple
    cols: tuple
    entries: tuple
    ring: Ring

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), len(self.cols))

    def leading_rows(self, degree: int) -> "JacobianBlock":
        """The sub-block of rows at exactly the given total degree."""
        keep = [r for r, (i, j) in enumerate(self.rows) if i + j == degree]
        return JacobianBlock(
            tuple(self.rows[r] for r in keep),
            self.cols,
            tuple(self.entries[r] for r in keep),
            self.ring,
        )


def block_from_columns(labels, series, M: int, ring: Ring) -> JacobianBlock:
    """Assemble a JacobianBlock from column series, rows through degree M."""
    for lab, s in zip(labels, series):
        if s.order < M:
            raise OrderError(
                f"column {lab} certified only to {s.order}, rows need {M}"
            )
    rows = monomials_up_to(M)
    entries = tuple(
        tuple(s.coeff(i, j) for s in series) for (i, j) in rows
    )
    return JacobianBlock(tuple(rows), tuple(labels), entries, ring)


def _unpack_base(base):
    if isinstance(base, tuple):
        return base
    return base.transition, base.w1, base.w2


def _dual_column(transition, w1, w2, slot) -> BiSeries:
    """One column through the dual-number path; slow, used as reference."""
    kind, comp, i, j = slot
    ring = transition.phi.ring
    if kind == "phi":
        unit = {(i, j): ring.one()}
        field = HomVectorField(
            ring, i + j, unit if comp == "a" else {}, unit if comp == "b" else {}
        )
        return dE_phi(transition, w1, w2, field).series
    which = 1 if kind == "w1" else 2
    order = (w1 if which == 1 else w2).order
    mono = BiSeries.monomial(ring, order, i, j)
    zero = BiSeries.zero(ring, order)
    direction = OneFormJet(mono, zero) if comp == "P" else OneFormJet(zero, mono)
    return dE_omega(transition, w1, w2, which, direction).series


def build_jacobian(base, M: int, cols, engine: str = "fast") -> JacobianBlock:
    """Jacobian of the residual at a base point, rows through degree M.

    cols is a list of slot labels from phi_slots / omega_slots.  The fast
    engine shares one Linearization across columns; engine="dual" evaluates
    each column independently through compat and exists so the fast path
    can be held to it.
    """
    transition, w1, w2 = _unpack_base(base)
    if engine == "fast":
        lin = Linearization(transition, w1, w2)
        series = [lin.column(s) for s in cols]
    elif engine == "dual":
        series = [_dual_column(transition, w1, w2, s) for s in cols]
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return block_from_columns(list(cols), series, M, transition.phi.ring)


@dataclass(frozen=True)
class RankReport:
    rank: int
    method: str
    primes: tuple
    per_prime: tuple
    consensus: bool
    base_point: str | None = None


def exact_rank(
    block: JacobianBlock,
    strategy: str = "auto",
    primes=CERT_PRIMES,
    base_point: str | None = None,
) -> RankReport:
    """Rank of a block: fraction-free over Q, or modular with consensus.

    Over a prime-field ring the block is eliminated natively in its own
    characteristic.  Over Q, "qq" is exact, "modular" reduces the cleared
    matrix at each prime (skipping any prime that divides a denominator)
    and reports the maximum with a consensus flag; "auto" picks by size.
    """
    rows, cols = block.shape
    if isinstance(block.ring, FpRing):
        p = block.ring.p
        matrix = [[c.val for c in row] for row in block.entries]
        r = rank_mod_p(matrix, p) if rows and cols else 0
        return RankReport(r, "modular", (p,), (r,), True, base_point)
    rational = [[Fraction(c) for c in row] for row in block.entries]
    if strategy == "auto":
        strategy = "qq" if rows * cols <= 1600 else "modular"
    if strategy == "qq":
        return RankReport(rank_exact_qq(rational), "qq", (), (), True, base_point)
    if strategy != "modular":
        raise ValueError(f"unknown strategy {strategy!r}")
    used, ranks = [], []
    for p in primes:
        reduced = fractions_mod_p(rational, p) if rows and cols else None
        if reduced is None and rows and cols:
            continue
        used.append(p)
        ranks.append(rank_mod_p(reduced, p) if rows and cols else 0)
    if not used:
        # every prime divided some denominator; fall back to the exact path
        return RankReport(rank_exact_qq(rational), "qq", (), (), True, base_point)
    return RankReport(
        max(ranks),
        "modular",
        tuple(used),
        tuple(ranks),
        len(set(ranks)) == 1 and len(used) == len(primes),
        base_point,
    )


def rescale_columns(lin: Linearization, N: int):
    """Columns for the transition directions (x*H, y*H), H of degree N.

    This is the band family whose leading rows realize multiplication by
    the contraction of the first leading form against the radial field.
    """
    labels, series = [], []
    for alpha in range(N + 1):
        beta = N - alpha
        col = lin.column(("phi", "a", alpha + 1, beta)) + lin.column(
            ("phi", "b", alpha, beta + 1)
        )
        labels.append(("rescale", alpha, beta))
        series.append(col)
    return labels, series


def shear_columns(lin: Linearization, N: int):
    """Columns for the first-component directions (g, 0), g of degree N+1.

    The fallback family for radial leading data, where the rescale family
    degenerates."""
    labels, series = [], []
    for i in range(N + 2):
        j = N + 1 - i
        labels.append(("shear", i, j))
        series.append(lin.column(("phi", "a", i, j)))
    return labels, series


def _leading_wedge_vanishes(w1: OneFormJet, w2: OneFormJet, nu: int) -> bool:
    lead1, lead2 = w1.homogeneous_part(nu), w2.homogeneous_part(nu)
    return leading_pair_parametrize(lead1, lead2) is not None


def rank_growth_check(
    k: int,
    nu: int,
    N: int,
    samples: int,
    seed: int,
    *,
    strategy: str = "modular",
    primes=CERT_PRIMES,
) -> dict:
    """Sampled certificate that the degree-(N+1) transition band adds rank.

    At each sampled flat point the leading pair is classified: nonradial
    data must give the rescale family rank at least N (equivalently kernel
    dimension at most 1 among the N+1 rescale directions), radial data
    must give the shear family rank exactly N+2 (the column count caps it,
    so a modular lower bound of N+2 is already exact).  Rows are taken at
    exactly degree N+2*nu, where only the leading form data can appear.
    """
    if N < 1:
        raise ValueError("rank growth starts at N = 1")
    lead_degree = N + 2 * nu
    records = []
    ranks = []
    all_ok = True
    for idx in range(samples):
        rng = derive(seed, "rank-growth", idx)
        label = f"seed={seed}/sample={idx}"
        try:
            z = sample_z_point(QQ, k, nu, N + 1, N + nu, rng)
        except RuntimeError as err:
            records.append({"index": idx, "error": str(err), "ok": False})
            all_ok = False
            continue
        if not _leading_wedge_vanishes(z.w1, z.w2, nu):
            records.append(
                {"index": idx, "family": z.family, "error": "leading wedge", "ok": False}
            )
            all_ok = False
            continue
        shape = radial_test(z.w1.homogeneous_part(nu), nu)
        lin = Linearization(z.transition, z.w1, z.w2)
        if shape == "nonradial":
            labels, series = rescale_columns(lin, N)
            required = N
        else:
            labels, series = shear_columns(lin, N)
            required = N + 2
        block = block_from_columns(labels, series, lead_degree, QQ).leading_rows(
            lead_degree
        )
        report = exact_rank(block, strategy, primes, base_point=label)
        ok = report.rank >= required
        if shape == "radial":
            # N+2 columns cap the rank, so meeting the bound is equality
            ok = report.rank == required
        records.append(
            {
                "index": idx,
                "family": z.family,
                "shape": shape,
                "rank": report.rank,
                "per_prime": list(report.per_prime),
                "required": required,
                "ok": ok,
            }
        )
        ranks.append(report.rank)
        all_ok = all_ok and ok
    return {
        "kind": "rank_growth",
        "k": k,
        "nu": nu,
        "N": N,
        "seed": seed,
        "primes": list(primes),
        "strategy": strategy,
        "sample_count": samples,
        "samples": records,
        "ranks": ranks,
        "verdict": "confirmed" if all_ok else "failed",
    }


def _full_slots(k: int, nu: int, N: int) -> list[tuple]:
    cols: list[tuple] = []
    for d in range(2, N + 2):
        cols.extend(phi_slots(d))
    for d in range(nu, N + nu + 1):
        cols.extend(omega_slots(1, k, d))
        cols.extend(omega_slots(2, k, d))
    return cols


def estimate_n1(
    k: int,
    nu: int,
    max_N: int,
    samples: int,
    seed: int,
    *,
    primes=CERT_PRIMES,
) -> dict:
    """Smallest N where the full Jacobian's rank beats the form-pair count.

    For each N the Jacobian at sampled flat points takes all transition
    slots through degree N+1 and all form slots through degree N+nu, rows
    through N+2*nu.  Once the modular rank exceeds dim_fol_jets(k, nu,
    N+nu) at every sample, nearby transitions generically admit no form
    pair solving the residual to that order, and that N is reported.  The
    rank accumulates roughly N^2/2 against a dimension growing linearly at
    4k+4 per degree, so termination is expected well inside max_N.
    """
    evidence = []
    for N in range(1, max_N + 1):
        dim = dim_fol_jets(k, nu, N + nu)
        cols = _full_slots(k, nu, N)
        ranks = []
        fams = []
        for idx in range(samples):
            rng = derive(seed, "estimate-n1", N, idx)
            z = sample_z_point(QQ, k, nu, N + 1, N + nu, rng)
            block = build_jacobian(z, N + 2 * nu, cols)
            report = exact_rank(block, "modular", primes)
            ranks.append(report.rank)
            fams.append(z.family)
        evidence.append({"N": N, "dim": dim, "ranks": ranks, "families": fams})
        if all(r > dim for r in ranks):
            return {
                "kind": "N1_estimate",
                "k": k,
                "nu": nu,
                "max_N": max_N,
                "sample_count": samples,
                "seed": seed,
                "primes": list(primes),
                "N1": N,
                "verdict": "reached",
                "evidence": evidence,
            }
    return {
        "kind": "N1_estimate",
        "k": k,
        "nu": nu,
        "max_N": max_N,
        "sample_count": samples,
        "seed": seed,
        "primes": list(primes),
        "N1": None,
        "verdict": "not_reached",
        "evidence": evidence,
    }


# alias under the capitalized spelling of the order it estimates
estimate_N1 = estimate_n1
