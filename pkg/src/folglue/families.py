"""Samplers for gluings that are flat to every order.

The rank statistics downstream (kernel bounds, the order where the
linearization outruns the parameter count) are only meaningful at points
where the compatibility residual actually vanishes, and random transition
jets essentially never land there.  This module manufactures such points
directly: each family below builds the transition and the two tagged forms
from a shared mechanism that kills the residual identically, not just to
the working order.

Three mechanisms are implemented.

* ``linear``: both charts carry the first integral x + s*y.  The forms are
  unit multiples of d(x + s*y) and the transition is chosen so that
  phi + s*psi is a function of x + s*y, which makes the pullback of the
  first form proportional to the second.
* ``graph``: chart 1 integrates dy, chart 2 integrates d(y + R(x)), and the
  transition sends y + R(x) through a univariate reparametrization.
* ``radial``: both forms are multiples of x dy - y dx, which rescales by a
  unit squared under any transition of the shape (x*u, y*u).

Every sampler re-checks flatness through the certified window before
handing the point out, so a construction bug here cannot silently poison a
rank experiment.
"""

from dataclasses import dataclass

from .compat import truncated_E
from .forms import OneFormJet
from .germs import DiffeoJet
from .prng import SplitMix
from .rings import Ring
from .series import BiSeries, OrderError, mul_poly

FAMILY_NAMES = ("linear", "graph", "radial")


@dataclass(frozen=True)
class ZPoint:
    """A transition with a pair of tagged forms it glues flatly."""

    transition: DiffeoJet
    w1: OneFormJet
    w2: OneFormJet
    family: str


def _nonzero_scalar(ring: Ring, rng: SplitMix):
    while True:
        c = ring.from_int(rng.int_in(-4, 4))
        if c:
            return c


def _rand_table(ring, rng, lo: int, hi: int, xcap=None, ycap=None) -> dict:
    """Random coefficient table on degrees lo..hi, about half the slots filled."""
    out = {}
    for d in range(lo, hi + 1):
        for i in range(d + 1):
            j = d - i
            if xcap is not None and i > xcap:
                continue
            if ycap is not None and j > ycap:
                continue
            if rng.below(2):
                c = ring.from_int(rng.int_in(-4, 4))
                if c:
                    out[(i, j)] = c
    return out


def _univariate(ring, rng, lo: int, hi: int) -> dict:
    """Random exponent table {m: c} on degrees lo..hi."""
    out = {}
    for m in range(lo, hi + 1):
        if rng.below(2):
            c = ring.from_int(rng.int_in(-4, 4))
            if c:
                out[m] = c
    return out


def _unit_univariate(ring, rng, extra: int) -> dict:
    """Exponent table of a univariate unit: nonzero constant, extra terms up to
    degree `extra`."""
    out = _univariate(ring, rng, 1, extra)
    out[0] = _nonzero_scalar(ring, rng)
    return out


def _linear_family(ring, k, nu, t_order, f_order, rng):
    # first integral x + s*y in both charts; the transition must satisfy
    # phi + s*psi = (x + s*y) + F(x + s*y), so phi is determined by the
    # free data (F, psi)
    s = ring.from_int(rng.int_in(-3, 3))
    u1 = _unit_univariate(ring, rng, f_order - nu)
    u2 = _unit_univariate(ring, rng, f_order - nu)
    p1 = BiSeries(ring, f_order, {(0, nu + m): c for m, c in u1.items()})
    p2 = BiSeries(ring, f_order, {(nu + m, 0): c for m, c in u2.items()})
    w1 = OneFormJet(p1, p1.scale(s), 1, k, nu)
    w2 = OneFormJet(p2, p2.scale(s), 2, k, nu)

    zero = BiSeries.zero(ring, t_order)
    base = BiSeries.variable_x(ring, t_order) + BiSeries.variable_y(
        ring, t_order
    ).scale(s)
    f_univ = BiSeries(
        ring, t_order, {(m, 0): c for m, c in _univariate(ring, rng, 2, t_order).items()}
    )
    h = _rand_table(ring, rng, 2, t_order)
    a_series = f_univ.compose(base, zero) - BiSeries(ring, t_order, h).scale(s)
    transition = DiffeoJet.from_perturbation(ring, t_order, dict(a_series.coeffs), h)
    return transition, w1, w2


def _graph_family(ring, k, nu, t_order, f_order, rng):
    # chart 1 integrates g(y), chart 2 integrates y + R(x); the transition
    # carries y + R(x) into a univariate function of itself, so both
    # pullback and second form are multiples of R'(x) dx + dy
    u1 = _unit_univariate(ring, rng, f_order - nu)
    q1 = BiSeries(ring, f_order, {(0, nu + m): c for m, c in u1.items()})
    w1 = OneFormJet(BiSeries.zero(ring, f_order), q1, 1, k, nu)

    r = _univariate(ring, rng, 2, t_order)
    u2 = _unit_univariate(ring, rng, f_order - nu)
    q2 = BiSeries(ring, f_order, {(nu + m, 0): c for m, c in u2.items()})
    r_prime = {}
    for m, c in r.items():
        cm = c * ring.from_int(m)
        if cm:
            r_prime[(m - 1, 0)] = cm
    p2 = mul_poly(q2, r_prime, f_order)
    w2 = OneFormJet(p2, q2, 2, k, nu)

    zero = BiSeries.zero(ring, t_order)
    r_series = BiSeries(ring, t_order, {(m, 0): c for m, c in r.items()})
    base = BiSeries.variable_y(ring, t_order) + r_series
    g2_series = BiSeries(
        ring, t_order, {(m, 0): c for m, c in _univariate(ring, rng, 2, t_order).items()}
    )
    psi_pert = r_series + g2_series.compose(base, zero)
    a = _rand_table(ring, rng, 2, t_order)
    transition = DiffeoJet.from_perturbation(ring, t_order, a, dict(psi_pert.coeffs))
    return transition, w1, w2


def _radial_family(ring, k, nu, t_order, f_order, rng):
    # transitions (x*u, y*u) rescale x dy - y dx by u^2, so any two radial
    # multiples glue flatly; needs k >= 1 and nu >= 1 for the chart bounds
    if k < 1 or nu < 1:
        raise ValueError("radial family needs k >= 1 and nu >= 1")
    v = _rand_table(ring, rng, 1, t_order - 1)
    a = {(i + 1, j): c for (i, j), c in v.items()}
    b = {(i, j + 1): c for (i, j), c in v.items()}
    transition = DiffeoJet.from_perturbation(ring, t_order, a, b)

    def radial_multiple(chart):
        xcap = k - 1 if chart == 1 else None
        ycap = k - 1 if chart == 2 else None
        w = _rand_table(ring, rng, nu - 1, f_order - 1, xcap=xcap, ycap=ycap)
        # pin the corner slot so the declared vanishing order is exact
        w[(0, nu - 1) if chart == 1 else (nu - 1, 0)] = _nonzero_scalar(ring, rng)
        p = BiSeries(ring, f_order, {(i, j + 1): -c for (i, j), c in w.items()})
        q = BiSeries(ring, f_order, {(i + 1, j): c for (i, j), c in w.items()})
        return OneFormJet(p, q, chart, k, nu)

    return transition, radial_multiple(1), radial_multiple(2)


_BUILDERS = {
    "linear": _linear_family,
    "graph": _graph_family,
    "radial": _radial_family,
}


def feasible_families(k: int, nu: int) -> tuple[str, ...]:
    if k >= 1 and nu >= 1:
        return FAMILY_NAMES
    return FAMILY_NAMES[:2]


def sample_z_point(
    ring: Ring,
    k: int,
    nu: int,
    transition_order: int,
    form_order: int,
    rng: SplitMix,
    family: str | None = None,
) -> ZPoint:
    """Draw one flat gluing of type (k, nu) at the requested working orders.

    The transition comes back at transition_order and both forms at
    form_order, tagged for charts 1 and 2.  With family=None the family is
    drawn from the feasible ones; passing a name pins it (and raises if
    that family cannot exist at this type).
    """
    if transition_order < 2:
        raise OrderError("transitions below order 2 carry no data")
    if form_order < nu:
        raise OrderError(
            f"form order {form_order} cannot hold a form vanishing to {nu}"
        )
    feasible = feasible_families(k, nu)
    fam = rng.choice(feasible) if family is None else family
    if fam not in FAMILY_NAMES:
        raise ValueError(f"unknown family {fam!r}")
    transition, w1, w2 = _BUILDERS[fam](ring, k, nu, transition_order, form_order, rng)

    # sample-time guard: the point must be flat through the certified window
    level = min(transition_order - 1, form_order - nu)
    if not truncated_E(transition, w1, w2, level).is_zero():
        raise RuntimeError(f"family {fam!r} produced a non-flat point")
    return ZPoint(transition, w1, w2, fam)
