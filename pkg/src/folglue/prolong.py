"""Degree-by-degree construction of foliation jets on a glued neighborhood.

For a fixed transition the residual is bilinear in the form pair, so
solving E = 0 through a working order splits by total degree: once both
forms are known through degree n, the residual rows of degree n + 1 + nu
are affine-linear in the degree-(n+1) components, with products of new
unknowns landing strictly higher.  Each level is one exact linear solve.
Only the lowest degree, where both leading parts appear at once, is
genuinely bilinear, and there the solution set is known in closed form:
two nonzero homogeneous forms wedge to zero exactly when both are
multiples of a shared direction.  enumerate_leading_strata lists those
factorizations family by family, so the solver never meets a nonlinear
equation: it specializes stratum parameters to concrete leading pairs
and runs the linear levels above them.

Free values, at the leading stage and at every kernel step above, are
filled by the specialization policy:

  * over a prime field the solver walks the whole tree of assignments
    under a node budget, and a verdict of obstruction is exact;
  * over the rationals it runs a few independent replica paths per
    stratum with seeded draws (replica 0 always takes the distinguished
    path: first-slot leading data, particular solutions at levels), and
    obstruction carries a probabilistic caveat, since an unlucky draw
    can miss a thin locus where solutions live.

A surviving path is never probabilistic: its explicit jets re-verify
through the compat evaluation path before the verdict says so.

brute_force_oracle answers the same question by raw sweep over a small
prime field: every normalized first form in turn, one linear kernel
question for the second form.  It shares only the linear solver with
the machinery above (its residual matrix comes from a plain pullback
and dict convolution, not from the column assembly) and exists to keep
decide_type honest.
"""

from dataclasses import dataclass
from itertools import product

from .certify import Linearization, omega_slots
from .compat import truncated_E
from .forms import OneFormJet, pullback
from .germs import DiffeoJet
from .linalg import solve_affine
from .prng import SplitMix, derive
from .rings import FpRing, Ring
from .series import BiSeries, OrderError


# ---------------------------------------------------------------------------
# leading strata


@dataclass(frozen=True)
class Stratum:
    """One family of wedge-zero leading pairs sharing a common direction.

    Leading pairs factor as w_i^nu = H_i * eta with eta homogeneous of
    degree mu and H_i homogeneous cofactors.  A direction without
    common factor attains x-degree mu and y-degree mu, so the chart
    bounds cap mu at min(k, nu) and box the cofactors to x-degree
    (chart 1) resp. y-degree (chart 2) at most k - mu.  The radial
    direction x dy - y dx is split out as its own stratum because rank
    behavior downstream differs there.  Dimensions count coefficient
    slots before any scaling quotient.
    """

    mu: int
    nu: int
    radial: bool
    eta_dim: int
    h1_dim: int
    h2_dim: int

    @property
    def label(self) -> str:
        shape = "radial" if self.radial else "nonradial"
        return f"{shape}(mu={self.mu})"

    @property
    def cofactor_degree(self) -> int:
        return self.nu - self.mu

    def eta_slots(self) -> list:
        """Direction monomials, P block then Q block, x-degree ascending."""
        if self.radial:
            return []
        return [
            (comp, (a, self.mu - a)) for comp in ("P", "Q") for a in range(self.mu + 1)
        ]

    def h1_slots(self) -> list:
        d = self.cofactor_degree
        return [(a, d - a) for a in range(self.h1_dim)]

    def h2_slots(self) -> list:
        d = self.cofactor_degree
        return [(d - b, b) for b in range(self.h2_dim)]

    def eta_tables(self, ring: Ring, values) -> tuple:
        if self.radial:
            return {(0, 1): -ring.one()}, {(1, 0): ring.one()}
        tp, tq = {}, {}
        for (comp, mono), v in zip(self.eta_slots(), values):
            if v:
                (tp if comp == "P" else tq)[mono] = v
        return tp, tq


def enumerate_leading_strata(k: int, nu: int) -> list[Stratum]:
    """All leading-data families for type (k, nu).

    mu = 0 always occurs; the radial stratum needs k >= 1 to fit its
    x dy term through the chart-1 bound and nu >= 1 to have degree-1
    content at all.
    """
    if k < 0 or nu < 0:
        raise ValueError("type data must be nonnegative")
    out = []
    for mu in range(min(k, nu) + 1):
        h_dim = min(nu - mu, k - mu) + 1
        out.append(
            Stratum(
                mu=mu,
                nu=nu,
                radial=False,
                eta_dim=2 * (mu + 1),
                h1_dim=h_dim,
                h2_dim=h_dim,
            )
        )
    if k >= 1 and nu >= 1:
        h_dim = min(nu - 1, k - 1) + 1
        out.append(
            Stratum(mu=1, nu=nu, radial=True, eta_dim=0, h1_dim=h_dim, h2_dim=h_dim)
        )
    return out


def _table_mul(a: dict, b: dict) -> dict:
    out = {}
    for (i1, j1), c1 in a.items():
        for (i2, j2), c2 in b.items():
            key = (i1 + i2, j1 + j2)
            c = c1 * c2
            if key in out:
                c = out[key] + c
            if c:
                out[key] = c
            else:
                out.pop(key, None)
    return out


def leading_tables(stratum: Stratum, ring: Ring, eta_vals, h1_vals, h2_vals) -> tuple:
    """Coefficient tables (w1 P, w1 Q, w2 P, w2 Q) of one leading pair.

    Value vectors are read against the stratum's slot lists; each must
    have a nonzero entry, since a zero factor would drop the vanishing
    order below nu.
    """
    etaP, etaQ = stratum.eta_tables(ring, eta_vals)
    h1 = {m: v for m, v in zip(stratum.h1_slots(), h1_vals) if v}
    h2 = {m: v for m, v in zip(stratum.h2_slots(), h2_vals) if v}
    if not h1 or not h2 or not (etaP or etaQ):
        raise ValueError("leading factors must be nonzero")
    return (
        _table_mul(h1, etaP),
        _table_mul(h1, etaQ),
        _table_mul(h2, etaP),
        _table_mul(h2, etaQ),
    )


# ---------------------------------------------------------------------------
# solver state and policy


TABLE_KEYS = (("w1", "P"), ("w1", "Q"), ("w2", "P"), ("w2", "Q"))


@dataclass(frozen=True)
class ProlongState:
    """Concrete form jets through `degree`, residual flat through degree + nu.

    Tables map monomial exponents to scalars, one per form component.
    Kernel dimensions met so far are kept for the certificate record;
    free parameters never live in the state because the solver
    specializes them the moment a kernel appears.
    """

    transition: DiffeoJet
    k: int
    nu: int
    degree: int
    tables: tuple
    kernel_dims: tuple = ()

    def table(self, kind: str, comp: str) -> dict:
        return self.tables[TABLE_KEYS.index((kind, comp))]


@dataclass(frozen=True)
class Inconsistency:
    level: int
    residual_degree: int
    detail: str


@dataclass(frozen=True)
class DecidePolicy:
    """Specialization and budget knobs for the decision walk.

    node_guard bounds the states visited by one decide_type call;
    max_states and param_cap bound the per-level kernel enumeration
    over a prime field, falling back to the particular solution (and a
    probabilistic verdict) beyond them.  replicas is the number of
    independent seeded paths per stratum over the rationals, and also
    the number of drawn extensions extend_one_degree returns when
    given an rng.
    """

    seed: int = 0
    replicas: int = 2
    param_cap: int = 12
    node_guard: int = 200_000
    max_states: int = 128


@dataclass(frozen=True)
class Certificate:
    """Outcome of a decision run, carrying its own audit trail.

    verdict is one of foliation_found, obstructed_at_order or
    inconclusive.  For a found foliation, witness holds the tagged form
    pair and witness_reverified records the independent residual check.
    For an obstruction, obstruction_order is the largest residual
    degree at which a branch died, and probabilistic says whether any
    random specialization or sampled fallback was involved; an exact
    obstruction (probabilistic False) only arises from a full
    prime-field exhaustion.  branches logs one record per leading
    stratum in enumeration order.
    """

    verdict: str
    k: int
    nu: int
    working_order: int
    obstruction_order: int | None
    probabilistic: bool
    ring_name: str
    seed: int
    branches: tuple
    witness: tuple | None = None
    witness_reverified: bool = False
    mode: str = "decide"


class GuardExceeded(ValueError):
    """A hard feasibility guard refused the requested enumeration."""


class _GuardTripped(Exception):
    pass


class _Budget:
    def __init__(self, limit: int):
        self.left = limit

    def spend(self):
        self.left -= 1
        if self.left < 0:
            raise _GuardTripped


def _slot_label(slot) -> str:
    kind, comp, i, j = slot
    return f"{kind}.{comp}[{i},{j}]"


def _forms_from_tables(tables, ring: Ring, order: int) -> tuple:
    series = [BiSeries(ring, order, dict(t)) for t in tables]
    return OneFormJet(series[0], series[1]), OneFormJet(series[2], series[3])


def _updated_tables(tables, slots, values) -> tuple:
    new = [dict(t) for t in tables]
    for (kind, comp, i, j), v in zip(slots, values):
        if v:
            new[TABLE_KEYS.index((kind, comp))][(i, j)] = v
    return tuple(new)


# ---------------------------------------------------------------------------
# one level of the linear hierarchy


def _level_system(transition: DiffeoJet, k: int, nu: int, tables, level: int):
    """Matrix and right-hand side of the residual rows at degree level + nu.

    The unknowns are the degree-`level` slots of both forms; the
    right-hand side reads the residual of the zero-extension of the
    current tables.  Rows below the target must already vanish; a
    nonzero one means the caller's state broke the flatness invariant,
    which is an engine bug rather than an obstruction, hence the
    RuntimeError.
    """
    ring = transition.phi.ring
    w1, w2 = _forms_from_tables(tables, ring, level)
    lin = Linearization(transition, w1, w2)
    slots = omega_slots(1, k, level) + omega_slots(2, k, level)
    cols = [lin.column(s) for s in slots]
    target = level + nu
    for s, c in zip(slots, cols):
        if c.order < target:
            raise OrderError(
                f"column {_slot_label(s)} certified to {c.order}, rows need {target}"
            )
    residual = truncated_E(transition, w1, w2, level - nu).series
    if not residual.jet(target - 1).is_zero():
        raise RuntimeError(
            f"state claimed residual flat through {target - 1} but it is not"
        )
    row_monos = [(i, target - i) for i in range(target + 1)]
    matrix = [[c.coeff(i, j) for c in cols] for (i, j) in row_monos]
    rhs = [-residual.coeff(i, j) for (i, j) in row_monos]
    return matrix, rhs, slots


def _solve_level(transition, k, nu, tables, level):
    matrix, rhs, slots = _level_system(transition, k, nu, tables, level)
    solved = solve_affine(matrix, rhs, transition.phi.ring, ncols=len(slots))
    return solved, slots


def _field_elements(ring: FpRing) -> list:
    return [ring.from_int(v) for v in range(ring.p)]


def _combine(particular, kernel, coeffs) -> list:
    out = list(particular)
    for c, vec in zip(coeffs, kernel):
        if c:
            for idx, v in enumerate(vec):
                if v:
                    out[idx] = out[idx] + c * v
    return out


def _draw(ring: Ring, rng: SplitMix):
    if isinstance(ring, FpRing):
        return ring.from_int(rng.below(ring.p))
    return ring.from_int(rng.int_in(-4, 4))


def _draw_vector(ring: Ring, rng: SplitMix, dim: int, nonzero: bool) -> tuple:
    if dim == 0:
        return ()
    vec = tuple(_draw(ring, rng) for _ in range(dim))
    while nonzero and not any(vec):
        vec = tuple(_draw(ring, rng) for _ in range(dim))
    return vec


def _first_slot(ring: Ring, dim: int) -> tuple:
    if dim == 0:
        return ()
    return (ring.one(),) + (ring.zero(),) * (dim - 1)


def extend_one_degree(state: ProlongState, policy: DecidePolicy | None = None, rng=None):
    """One prolongation step: extensions of the state by one degree.

    Returns a list of ProlongState or an Inconsistency naming the
    residual degree that no correction cancels.  Over a prime field the
    solution set is enumerated exhaustively while the kernel stays
    under the policy caps (the first entry is always the particular
    solution); otherwise the particular solution is returned alone,
    followed by `policy.replicas` seeded kernel draws when an rng is
    supplied.
    """
    policy = policy or DecidePolicy()
    level = state.degree + 1
    transition = state.transition
    if transition.order < level + 1:
        raise OrderError(
            f"transition order {transition.order} cannot certify level {level}"
        )
    solved, slots = _solve_level(transition, state.k, state.nu, state.tables, level)
    if solved is None:
        return Inconsistency(
            level,
            level + state.nu,
            f"residual rows of degree {level + state.nu} admit no degree-{level} "
            "correction",
        )
    particular, kernel = solved
    ring = transition.phi.ring
    dim = len(kernel)
    if (
        isinstance(ring, FpRing)
        and dim <= policy.param_cap
        and ring.p**dim <= policy.max_states
    ):
        combos = [list(c) for c in product(_field_elements(ring), repeat=dim)]
    else:
        combos = [[ring.zero()] * dim]
        if rng is not None:
            combos.extend(
                list(_draw_vector(ring, rng, dim, nonzero=False))
                for _ in range(policy.replicas)
            )
    out = []
    for coeffs in combos:
        values = _combine(particular, kernel, coeffs)
        out.append(
            ProlongState(
                transition,
                state.k,
                state.nu,
                level,
                _updated_tables(state.tables, slots, values),
                state.kernel_dims + (dim,),
            )
        )
    return out


# ---------------------------------------------------------------------------
# the decision walk


def _note_death(record: dict, degree: int) -> None:
    if record["fail_degree"] is None or degree > record["fail_degree"]:
        record["fail_degree"] = degree


def _projective_tuples(ring: FpRing, dim: int):
    """Vectors over F_p with first nonzero entry 1, one per scaling class."""
    elems = _field_elements(ring)
    one, zero = ring.one(), ring.zero()
    for lead in range(dim):
        for tail in product(elems, repeat=dim - lead - 1):
            yield (zero,) * lead + (one,) + tail


def _dfs_levels(state: ProlongState, working_order, policy, budget, record):
    if state.degree >= working_order:
        return state.tables
    extended = extend_one_degree(state, policy)
    if isinstance(extended, Inconsistency):
        _note_death(record, extended.residual_degree)
        return None
    dim = extended[0].kernel_dims[-1]
    if state.degree + 1 == working_order:
        # any solution of the final level completes a witness, so the
        # siblings of the particular one add nothing
        extended = extended[:1]
    elif dim and len(extended) != state.transition.phi.ring.p**dim:
        record["mode"] = "sampled"
    for nxt in extended:
        budget.spend()
        record["nodes"] += 1
        got = _dfs_levels(nxt, working_order, policy, budget, record)
        if got is not None:
            return got
    return None


def _walk_stratum_exhaustive(
    transition, k, nu, working_order, policy, stratum, budget, record
):
    """Full walk of one stratum over a prime field.

    Leading factors run over projective representatives, which quotients
    exactly the two scaling gauges of the pair; every kernel above is
    enumerated by extend_one_degree.  Returns witness tables or None.
    """
    ring = transition.phi.ring
    eta_choices = (
        [()] if stratum.radial else _projective_tuples(ring, stratum.eta_dim)
    )
    for eta_vals in eta_choices:
        for h1_vals in _projective_tuples(ring, stratum.h1_dim):
            for h2_vals in _projective_tuples(ring, stratum.h2_dim):
                budget.spend()
                record["nodes"] += 1
                tables = leading_tables(stratum, ring, eta_vals, h1_vals, h2_vals)
                state = ProlongState(transition, k, nu, nu, tables)
                got = _dfs_levels(state, working_order, policy, budget, record)
                if got is not None:
                    return got
    return None


def _walk_stratum_random(
    transition, k, nu, working_order, policy, stratum, stratum_idx, record
):
    """Replica paths with seeded draws over a non-enumerable ring.

    Replica 0 is the distinguished path: first-slot leading factors and
    the particular solution at every level, so witnesses lying on the
    simplest locus are found deterministically.  Later replicas draw
    leading factors and one kernel offset per level.  Returns witness
    tables or None.
    """
    ring = transition.phi.ring
    log = []
    found = None
    for replica in range(policy.replicas):
        rng = derive(policy.seed, "decide", k, nu, stratum_idx, replica)
        if replica == 0:
            eta_vals = _first_slot(ring, stratum.eta_dim)
            h1_vals = _first_slot(ring, stratum.h1_dim)
            h2_vals = _first_slot(ring, stratum.h2_dim)
        else:
            eta_vals = _draw_vector(ring, rng, stratum.eta_dim, nonzero=True)
            h1_vals = _draw_vector(ring, rng, stratum.h1_dim, nonzero=True)
            h2_vals = _draw_vector(ring, rng, stratum.h2_dim, nonzero=True)
        record["nodes"] += 1
        tables = leading_tables(stratum, ring, eta_vals, h1_vals, h2_vals)
        state = ProlongState(transition, k, nu, nu, tables)
        died = None
        while state.degree < working_order:
            record["nodes"] += 1
            extended = extend_one_degree(
                state, policy, rng=None if replica == 0 else rng
            )
            if isinstance(extended, Inconsistency):
                died = extended.residual_degree
                _note_death(record, died)
                break
            state = extended[0] if replica == 0 or len(extended) == 1 else extended[1]
        log.append({"replica": replica, "died_at": died})
        if died is None:
            found = state.tables
            break
    record["replicas"] = log
    return found


def _verify_witness(transition, k, nu, working_order, tables) -> tuple:
    ring = transition.phi.ring
    series = [BiSeries(ring, working_order, dict(t)) for t in tables]
    w1 = OneFormJet(series[0], series[1], 1, k, nu)
    w2 = OneFormJet(series[2], series[3], 2, k, nu)
    if not truncated_E(transition, w1, w2, working_order - nu).is_zero():
        raise RuntimeError("witness failed the independent residual check")
    return w1, w2


def decide_type(
    transition: DiffeoJet,
    k: int,
    nu: int,
    working_order: int,
    policy: DecidePolicy | None = None,
) -> Certificate:
    """Does the glued neighborhood carry a type-(k, nu) foliation jet
    through the working order?

    Runs every leading stratum through the level hierarchy under the
    specialization policy described in the module docstring.  A found
    witness is re-verified through the compat evaluation path and makes
    the verdict exact over any ring; when every stratum dies the
    verdict is obstructed, exact for a full prime-field walk and
    probabilistic otherwise; a tripped node budget with no witness
    leaves the question inconclusive.
    """
    policy = policy or DecidePolicy()
    ring = transition.phi.ring
    if working_order < nu:
        raise ValueError(
            f"working order {working_order} cannot hold forms vanishing to {nu}"
        )
    if transition.order < working_order + 1:
        raise OrderError(
            f"transition order {transition.order} cannot certify working order "
            f"{working_order}"
        )
    exhaustive = isinstance(ring, FpRing)
    budget = _Budget(policy.node_guard)
    branches = []
    witness_tables = None
    any_tripped = False
    for idx, stratum in enumerate(enumerate_leading_strata(k, nu)):
        record = {
            "stratum": stratum.label,
            "mode": "exhaustive" if exhaustive else "replicas",
            "outcome": None,
            "fail_degree": None,
            "nodes": 0,
        }
        if witness_tables is not None:
            record["outcome"] = "skipped_after_witness"
            branches.append(record)
            continue
        try:
            if exhaustive:
                got = _walk_stratum_exhaustive(
                    transition, k, nu, working_order, policy, stratum, budget, record
                )
            else:
                got = _walk_stratum_random(
                    transition, k, nu, working_order, policy, stratum, idx, record
                )
        except _GuardTripped:
            record["outcome"] = "guard_tripped"
            any_tripped = True
            branches.append(record)
            continue
        if got is not None:
            record["outcome"] = "survived"
            witness_tables = got
        else:
            record["outcome"] = "died"
        branches.append(record)
    any_random = any(r["mode"] != "exhaustive" for r in branches)
    if witness_tables is not None:
        w1, w2 = _verify_witness(transition, k, nu, working_order, witness_tables)
        return Certificate(
            "foliation_found",
            k,
            nu,
            working_order,
            None,
            False,
            ring.name,
            policy.seed,
            tuple(branches),
            witness=(w1, w2),
            witness_reverified=True,
        )
    if any_tripped:
        return Certificate(
            "inconclusive",
            k,
            nu,
            working_order,
            None,
            any_random,
            ring.name,
            policy.seed,
            tuple(branches),
        )
    fail = max(r["fail_degree"] for r in branches if r["fail_degree"] is not None)
    return Certificate(
        "obstructed_at_order",
        k,
        nu,
        working_order,
        fail,
        any_random,
        ring.name,
        policy.seed,
        tuple(branches),
    )


# ---------------------------------------------------------------------------
# independent ground truth over a small prime field


def brute_force_oracle(
    transition: DiffeoJet,
    k: int,
    nu: int,
    working_order: int,
    p: int | None = None,
) -> Certificate:
    """Existence verdict by raw enumeration over a small prime field.

    Sweeps every first form with pinned leading coefficient (the pin
    runs over the degree-nu slots in order, earlier slots zero, so the
    sweep meets each scaling class once and the vanishing order is
    exactly nu).  For each candidate the second form solves a single
    linear kernel system whose matrix is the convolution against the
    pulled-back candidate; a foliation exists exactly when some kernel
    basis vector has a nonzero degree-nu block, since the vectors
    without one form a subspace.  Witnesses re-verify through the
    compat path before being reported.
    """
    ring = transition.phi.ring
    if not isinstance(ring, FpRing):
        raise ValueError("the oracle enumerates over a prime field")
    if p is not None and p != ring.p:
        raise ValueError(f"transition lives over fp:{ring.p}, caller said {p}")
    p = ring.p
    W = working_order
    if W < nu:
        raise ValueError(f"working order {W} cannot hold forms vanishing to {nu}")
    if transition.order < W + 1:
        raise OrderError(
            f"transition order {transition.order} cannot certify working order {W}"
        )
    slots1 = [s for d in range(nu, W + 1) for s in omega_slots(1, k, d)]
    slots2 = [s for d in range(nu, W + 1) for s in omega_slots(2, k, d)]
    if p ** (len(slots1) + len(slots2)) > 10**8:
        raise GuardExceeded(
            f"{len(slots1) + len(slots2)} parameters over fp:{p} exceed the 1e8 "
            "enumeration guard"
        )
    lead_count = len(omega_slots(1, k, nu))
    nu_positions = [pos for pos, (_, _, i, j) in enumerate(slots2) if i + j == nu]
    elems = _field_elements(ring)
    row_monos = [(i, d - i) for d in range(W + nu + 1) for i in range(d + 1)]
    empty = tuple({} for _ in TABLE_KEYS)
    zero = ring.zero()
    candidates = 0
    for pin_pos in range(lead_count):
        free = slots1[pin_pos + 1 :]
        for assignment in product(elems, repeat=len(free)):
            candidates += 1
            tables = _updated_tables(
                empty,
                [slots1[pin_pos]] + list(free),
                [ring.one()] + list(assignment),
            )
            w1 = OneFormJet(
                BiSeries(ring, W, dict(tables[0])),
                BiSeries(ring, W, dict(tables[1])),
            )
            pulled = pullback(transition, w1)
            matrix = []
            for a, b in row_monos:
                row = []
                for _, comp, i, j in slots2:
                    if a < i or b < j:
                        row.append(zero)
                    elif comp == "P":
                        row.append(-pulled.Q.coeff(a - i, b - j))
                    else:
                        row.append(pulled.P.coeff(a - i, b - j))
                matrix.append(row)
            _, kernel = solve_affine(
                matrix, [zero] * len(row_monos), ring, ncols=len(slots2)
            )
            hit = next(
                (vec for vec in kernel if any(vec[q] for q in nu_positions)), None
            )
            if hit is None:
                continue
            full = _updated_tables(tables, slots2, hit)
            w1v, w2v = _verify_witness(transition, k, nu, W, full)
            return Certificate(
                "foliation_found",
                k,
                nu,
                W,
                None,
                False,
                ring.name,
                0,
                ({"sweep": "first-form", "candidates": candidates},),
                witness=(w1v, w2v),
                witness_reverified=True,
                mode="oracle",
            )
    return Certificate(
        "obstructed_at_order",
        k,
        nu,
        W,
        W + nu,
        False,
        ring.name,
        0,
        ({"sweep": "first-form", "candidates": candidates},),
        mode="oracle",
    )
