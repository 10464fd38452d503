"""Jets of differential forms on a chart, and the operators the
compatibility calculus needs: wedge, pullback along a transition jet,
Lie derivative along a homogeneous vector field, radial contraction.

A foliation candidate on one chart is a 1-form jet P dx + Q dy whose
coefficients obey that chart's degree bound: on chart 1 every monomial
x^i y^j appearing in P or Q has i <= k, on chart 2 it has j <= k.  The
bound is what makes the foliation search finite-dimensional at each
order.  Forms produced by the operators (pullbacks, Lie derivatives)
satisfy no such bound and carry chart=None.

Working orders follow the jet algebra's min rule; the few places where a
factor is an exactly known polynomial (vector-field coefficients, the
radial contraction's monomial shifts) use that to keep an extra degree,
with mul_poly checking the claimed bound.
"""

from __future__ import annotations

from dataclasses import dataclass

from .germs import DiffeoJet
from .rings import Ring
from .series import BiSeries, OrderError, mul_poly


class OneFormJet:
    """Jet of a 1-form P dx + Q dy, optionally tagged as chart data.

    A tagged form carries (chart, k, nu) together: the chart's degree
    bound is checked monomial by monomial and the declared vanishing
    order nu must be the actual one, which in particular rules out the
    zero form.  Untagged instances are raw pairs with no invariants;
    operators that cannot preserve the bound return those.
    """

    __slots__ = ("ring", "order", "P", "Q", "chart", "k", "nu")

    def __init__(
        self,
        P: BiSeries,
        Q: BiSeries,
        chart: int | None = None,
        k: int | None = None,
        nu: int | None = None,
    ):
        if P.ring != Q.ring:
            raise ValueError("components over different rings")
        if P.order != Q.order:
            raise ValueError(
                f"components at different working orders {P.order}, {Q.order}"
            )
        tags = (chart is None, k is None, nu is None)
        if any(tags) != all(tags):
            raise ValueError("chart, k and nu come together")
        if chart is not None:
            if chart not in (1, 2):
                raise ValueError(f"chart must be 1 or 2, got {chart}")
            if k < 0:
                raise ValueError(f"negative degree bound {k}")
            for s in (P, Q):
                for (i, j) in s.support():
                    bad = i > k if chart == 1 else j > k
                    if bad:
                        raise ValueError(
                            f"monomial x^{i} y^{j} violates the chart-{chart} "
                            f"bound {k}"
                        )
            cands = [
                v
                for v in (P.order_of_vanishing(), Q.order_of_vanishing())
                if v is not None
            ]
            actual = min(cands) if cands else None
            if actual != nu:
                raise ValueError(
                    f"declared vanishing order {nu}, components vanish to {actual}"
                )
        self.ring = P.ring
        self.order = P.order
        self.P = P
        self.Q = Q
        self.chart = chart
        self.k = k
        self.nu = nu

    @classmethod
    def zero(cls, ring: Ring, order: int):
        z = BiSeries.zero(ring, order)
        return cls(z, z)

    def is_zero(self) -> bool:
        return self.P.is_zero() and self.Q.is_zero()

    def vanishing_order(self) -> int | None:
        """Smallest total degree carrying a nonzero coefficient in P or Q."""
        cands = [
            v
            for v in (self.P.order_of_vanishing(), self.Q.order_of_vanishing())
            if v is not None
        ]
        return min(cands) if cands else None

    def _tags(self):
        return self.chart, self.k, self.nu

    def jet(self, n: int) -> "OneFormJet":
        return OneFormJet(self.P.jet(n), self.Q.jet(n), *self._tags())

    def padded(self, n: int) -> "OneFormJet":
        return OneFormJet(self.P.padded(n), self.Q.padded(n), *self._tags())

    def homogeneous_part(self, n: int) -> "OneFormJet":
        """Graded piece, returned untagged: a single degree is not a
        type-(k, nu) candidate in its own right."""
        return OneFormJet(self.P.homogeneous_part(n), self.Q.homogeneous_part(n))

    def __add__(self, other):
        if not isinstance(other, OneFormJet):
            return NotImplemented
        P = self.P + other.P
        Q = self.Q + other.Q
        if self._tags() == other._tags() and self.chart is not None:
            cands = [
                v
                for v in (P.order_of_vanishing(), Q.order_of_vanishing())
                if v is not None
            ]
            if cands:
                return OneFormJet(P, Q, self.chart, self.k, min(cands))
        return OneFormJet(P, Q)

    def __sub__(self, other):
        if not isinstance(other, OneFormJet):
            return NotImplemented
        return self + other.scale(-self.ring.one())

    def scale(self, c) -> "OneFormJet":
        if not c:
            return OneFormJet(self.P.scale(c), self.Q.scale(c))
        return OneFormJet(self.P.scale(c), self.Q.scale(c), *self._tags())

    def __eq__(self, other):
        if not isinstance(other, OneFormJet):
            return NotImplemented
        return self.P == other.P and self.Q == other.Q

    def __hash__(self):
        return hash((self.P, self.Q))

    def __repr__(self):
        tag = (
            f", chart={self.chart}, k={self.k}, nu={self.nu}"
            if self.chart
            else ""
        )
        return f"OneFormJet(({self.P!r}) dx + ({self.Q!r}) dy{tag})"


class TwoFormJet:
    """Jet of a 2-form f dx^dy; just a tagged coefficient series."""

    __slots__ = ("ring", "order", "f")

    def __init__(self, f: BiSeries):
        self.ring = f.ring
        self.order = f.order
        self.f = f

    def is_zero(self) -> bool:
        return self.f.is_zero()

    def __eq__(self, other):
        if not isinstance(other, TwoFormJet):
            return NotImplemented
        return self.f == other.f

    def __hash__(self):
        return hash(self.f)

    def __repr__(self):
        return f"TwoFormJet(({self.f!r}) dx^dy)"


def wedge(left: OneFormJet, right: OneFormJet) -> TwoFormJet:
    """(P1 dx + Q1 dy) ^ (P2 dx + Q2 dy) = (P1 Q2 - Q1 P2) dx^dy."""
    return TwoFormJet(left.P * right.Q - left.Q * right.P)


def pullback(transition: DiffeoJet, form: OneFormJet) -> OneFormJet:
    """Pull a 1-form jet back along a transition jet.

    With the map written (u, v) = (phi, psi),

        pullback = (P(u,v) u_x + Q(u,v) v_x) dx + (P(u,v) u_y + Q(u,v) v_y) dy.

    Sound order: composition keeps min(form.order, transition.order), the
    chain-rule factors are partials one order lower, so the result holds
    to min(form.order, transition.order - 1).
    """
    phi, psi = transition.phi, transition.psi
    p = form.P.compose(phi, psi)
    q = form.Q.compose(phi, psi)
    return OneFormJet(
        p * phi.partial_x() + q * psi.partial_x(),
        p * phi.partial_y() + q * psi.partial_y(),
    )


class HomVectorField:
    """Homogeneous polynomial vector field a(x,y) d/dx + b(x,y) d/dy.

    These are the directions in which a transition jet moves: its
    degree-n coefficient pair acts as the field a d/dx + b d/dy, so the
    degree starts at 2 where the perturbation data lives.  Coefficients
    are exact homogeneous polynomials of one shared degree, kept as
    plain dicts so they can multiply jets through mul_poly without
    losing order.
    """

    __slots__ = ("ring", "degree", "a", "b")

    def __init__(self, ring: Ring, degree: int, a: dict, b: dict):
        if degree < 2:
            raise ValueError(
                "transition directions start at degree 2 to preserve tangency"
            )
        for tag, table in (("a", a), ("b", b)):
            for (i, j), c in table.items():
                if i + j != degree:
                    raise ValueError(
                        f"{tag}[{i},{j}] is not homogeneous of degree {degree}"
                    )
        self.ring = ring
        self.degree = degree
        self.a = {k: c for k, c in a.items() if c}
        self.b = {k: c for k, c in b.items() if c}

    @classmethod
    def from_radial_multiple(cls, ring: Ring, h: dict) -> "HomVectorField":
        """The field h * (x d/dx + y d/dy) for a homogeneous table h."""
        if not h:
            raise ValueError("radial multiple of the zero polynomial")
        degs = {i + j for (i, j) in h}
        if len(degs) != 1:
            raise ValueError("scaling factor must be homogeneous")
        (d,) = degs
        a = {(i + 1, j): c for (i, j), c in h.items()}
        b = {(i, j + 1): c for (i, j), c in h.items()}
        return cls(ring, d + 1, a, b)

    def is_zero(self) -> bool:
        return not self.a and not self.b

    def as_series(self, order: int) -> tuple[BiSeries, BiSeries]:
        """Components as jets; exact polynomials justify any working order."""
        if order < self.degree:
            raise OrderError(
                f"field of degree {self.degree} does not fit in an order-{order} jet"
            )
        return (
            BiSeries(self.ring, order, dict(self.a)),
            BiSeries(self.ring, order, dict(self.b)),
        )


def lie_derivative(field: HomVectorField, form: OneFormJet) -> OneFormJet:
    """Lie derivative of a 1-form jet along a homogeneous vector field.

    For X = a d/dx + b d/dy and omega = P dx + Q dy, Cartan's formula gives

        L_X omega = (a P_x + b P_y + a_x P + b_x Q) dx
                  + (a Q_x + b Q_y + a_y P + b_y Q) dy.

    Each product pairs an exact polynomial of degree >= deg(X) - 1 with a
    jet of order >= form.order - 1, so the whole result is sound to
    form.order + deg(X) - 1, one degree beyond the naive min rule.
    """
    n_out = form.order + field.degree - 1
    ax = _pdx(field.a)
    ay = _pdy(field.a)
    bx = _pdx(field.b)
    by = _pdy(field.b)
    P, Q = form.P, form.Q
    Px, Py = P.partial_x(), P.partial_y()
    Qx, Qy = Q.partial_x(), Q.partial_y()
    dx_comp = (
        mul_poly(Px, field.a, n_out)
        + mul_poly(Py, field.b, n_out)
        + mul_poly(P, ax, n_out)
        + mul_poly(Q, bx, n_out)
    )
    dy_comp = (
        mul_poly(Qx, field.a, n_out)
        + mul_poly(Qy, field.b, n_out)
        + mul_poly(P, ay, n_out)
        + mul_poly(Q, by, n_out)
    )
    return OneFormJet(dx_comp, dy_comp)


def radial_contraction(form: OneFormJet) -> BiSeries:
    """Contraction with the radial field: x P + y Q, sound one degree past
    the form's order because multiplying by a variable is exact."""
    return form.P.shifted(1, 0) + form.Q.shifted(0, 1)


def radial_multiple(w: dict) -> tuple[dict, dict]:
    """Component tables of w * (x dy - y dx) for a coefficient table w."""
    P = {}
    Q = {}
    for (i, j), c in w.items():
        P[(i, j + 1)] = -c
        Q[(i + 1, j)] = c
    return P, Q


def _pdx(table: dict) -> dict:
    return {(i - 1, j): c * i for (i, j), c in table.items() if i > 0}


def _pdy(table: dict) -> dict:
    return {(i, j - 1): c * j for (i, j), c in table.items() if j > 0}


def _homogeneous_table(s: BiSeries, what: str) -> dict:
    degs = {i + j for (i, j) in s.support()}
    if len(degs) > 1:
        raise ValueError(f"{what} is not homogeneous")
    return dict(s.coeffs)


def radial_test(leading: OneFormJet, nu: int) -> str:
    """Classify a nonzero homogeneous leading pair of degree nu.

    The pair is radial exactly when x P + y Q vanishes identically, which
    happens exactly for the multiples of x dy - y dx.
    """
    if leading.is_zero():
        raise ValueError("cannot classify a zero leading part")
    p = _homogeneous_table(leading.P, "leading part")
    q = _homogeneous_table(leading.Q, "leading part")
    degs = {i + j for table in (p, q) for (i, j) in table}
    if degs != {nu}:
        raise ValueError(f"leading part is not homogeneous of degree {nu}")
    contraction: dict = {}
    for (i, j), c in p.items():
        k = (i + 1, j)
        contraction[k] = contraction.get(k, leading.ring.zero()) + c
    for (i, j), c in q.items():
        k = (i, j + 1)
        contraction[k] = contraction.get(k, leading.ring.zero()) + c
    return "radial" if not any(contraction.values()) else "nonradial"


@dataclass(frozen=True)
class LeadingFactorization:
    """ω_i = H_i · η with η primitive: the shared direction of a
    proportional pair of homogeneous leading parts."""

    H1: dict
    H2: dict
    eta: tuple[dict, dict]


def leading_pair_parametrize(w1, w2) -> LeadingFactorization | None:
    """Factor a proportional pair of nonzero homogeneous 1-forms.

    Both inputs are homogeneous pairs (each of its own degree).  When
    their wedge vanishes they share a direction: stripping the content
    of the first pair leaves a primitive form η, and exact division
    recovers the cofactors H_i.  Returns None when the wedge does not
    vanish, i.e. the pair is not proportional.

    η is normalized so its leading coefficient (largest x exponent,
    Q component preferred) is one; the H_i absorb the rest.
    """
    p1 = _homogeneous_table(w1.P, "first pair")
    q1 = _homogeneous_table(w1.Q, "first pair")
    p2 = _homogeneous_table(w2.P, "second pair")
    q2 = _homogeneous_table(w2.Q, "second pair")
    if w1.is_zero() or w2.is_zero():
        raise ValueError("cannot factor a zero leading part")
    # The wedge of exact polynomial data is checked as such; jet
    # multiplication could truncate the product degree away.
    cross = _table_mul(p1, q2)
    for key, c in _table_mul(q1, p2).items():
        cur = cross.get(key)
        nxt = -c if cur is None else cur - c
        if nxt:
            cross[key] = nxt
        else:
            cross.pop(key, None)
    if cross:
        return None
    content = homogeneous_gcd(p1, q1)
    eta_p = _homogeneous_div(p1, content)
    eta_q = _homogeneous_div(q1, content)
    # normalize off the dy component first so x dy - y dx keeps its
    # usual orientation
    lead = _leading_coefficient(eta_q if eta_q else eta_p)
    eta_p = {k: c / lead for k, c in eta_p.items()}
    eta_q = {k: c / lead for k, c in eta_q.items()}
    h1 = {k: c * lead for k, c in content.items()}
    if eta_p:
        h2 = _homogeneous_div(p2, eta_p)
    else:
        h2 = _homogeneous_div(q2, eta_q)
    if h2 is None:
        return None
    if _table_mul(h2, eta_p) != p2 or _table_mul(h2, eta_q) != q2:
        return None
    return LeadingFactorization(h1, h2, (eta_p, eta_q))


def _leading_coefficient(table: dict):
    return table[max(table, key=lambda k: k[0])]


def _table_mul(u: dict, v: dict) -> dict:
    out: dict = {}
    for (i1, j1), c1 in u.items():
        for (i2, j2), c2 in v.items():
            k = (i1 + i2, j1 + j2)
            prod = c1 * c2
            out[k] = out[k] + prod if k in out else prod
    return {k: c for k, c in out.items() if c}


def _homogeneous_div(num: dict, den: dict) -> dict | None:
    """Exact quotient of homogeneous bivariate polynomials, or None.

    Homogeneous polynomials are faithfully encoded by their univariate
    image under y = 1 together with their degree, so one long division
    decides divisibility; the quotient fails to be polynomial exactly
    when an exponent overshoots the quotient degree.
    """
    if not den:
        raise ZeroDivisionError("division by the zero polynomial")
    if not num:
        return {}
    dn = next(i + j for (i, j) in num)
    dd = next(i + j for (i, j) in den)
    if dn < dd:
        return None
    u = {i: c for (i, j), c in num.items()}
    v = {i: c for (i, j), c in den.items()}
    dv = max(v)
    vlead = v[dv]
    quot: dict = {}
    while u:
        du = max(u)
        if du < dv:
            return None
        factor = u[du] / vlead
        quot[du - dv] = factor
        for e, c in v.items():
            k = e + du - dv
            cur = u.get(k)
            nxt = -factor * c if cur is None else cur - factor * c
            if nxt:
                u[k] = nxt
            else:
                u.pop(k, None)
    dq = dn - dd
    if any(e > dq for e in quot):
        return None
    return {(e, dq - e): c for e, c in quot.items()}


def homogeneous_gcd(p: dict, q: dict) -> dict:
    """Greatest common divisor of two homogeneous bivariate polynomials
    over a field, returned as a coefficient table normalized to leading
    coefficient one (leading = largest x exponent).

    Strategy: split off the common monomial content x^a y^b, dehomogenize
    the rest at y = 1 (valid once neither part is divisible by x or y),
    run the univariate Euclid, and rehomogenize.  Degrees match up because
    the stripped parts have nonzero constant and leading coefficients, so
    no factor hides at 0 or infinity.
    """
    if not p:
        return _monic_homogeneous(q)
    if not q:
        return _monic_homogeneous(p)
    ax = min(min(i for (i, j) in p), min(i for (i, j) in q))
    ay = min(min(j for (i, j) in p), min(j for (i, j) in q))

    def dehomogenize(table) -> dict:
        sx = min(i for (i, j) in table)
        return {i - sx: c for (i, j), c in table.items()}

    g = _univariate_gcd(dehomogenize(p), dehomogenize(q))
    gdeg = max(g)
    out = {(e + ax, gdeg - e + ay): c for e, c in g.items()}
    return _monic_homogeneous(out)


def _monic_homogeneous(table: dict) -> dict:
    if not table:
        return {}
    lead = table[max(table, key=lambda k: k[0])]
    return {k: c / lead for k, c in table.items()}


def _univariate_gcd(u: dict, v: dict) -> dict:
    """Euclid on sparse {exponent: coefficient} dicts over a field."""

    def rem(a: dict, b: dict) -> dict:
        db = max(b)
        blead = b[db]
        a = dict(a)
        while a and max(a) >= db:
            da = max(a)
            factor = a[da] / blead
            for e, c in b.items():
                k = e + da - db
                cur = a.get(k)
                nxt = -factor * c if cur is None else cur - factor * c
                if nxt:
                    a[k] = nxt
                else:
                    a.pop(k, None)
        return a

    while v:
        u, v = v, rem(u, v)
    return u
