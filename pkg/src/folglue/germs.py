"""Jets of gluing diffeomorphisms tangent to the identity.

A neighborhood germ is presented by its transition map on the overlap of
two trivializing charts.  After normalizing the linear part away, what
remains is a pair jet

    phi = x + sum a_ij x^i y^j,   psi = y + sum b_ij x^i y^j,   i + j >= 2,

and this module is the group calculus on such pairs: composition,
inversion by fixed-point iteration, truncation, perturbation of a degree
band, and the sup norm on the perturbation coefficients that the
hardening budget is measured in.

The tangent-to-identity normalization is enforced at construction, not
assumed: a constructor argument with a constant term, a wrong linear
part, or mismatched component orders is rejected immediately, so every
DiffeoJet in circulation is well formed.
"""

from __future__ import annotations

from fractions import Fraction

from .prng import SplitMix
from .rings import FpRing, RationalRing, Ring, abs_value
from .series import BiSeries, DegreeBand, OrderError


class DiffeoJet:
    """Jet of a chart-transition map tangent to the identity."""

    __slots__ = ("ring", "order", "phi", "psi")

    def __init__(self, phi: BiSeries, psi: BiSeries):
        if phi.ring != psi.ring:
            raise ValueError("components over different rings")
        if phi.order != psi.order:
            raise ValueError(
                f"components at different working orders {phi.order}, {psi.order}"
            )
        if phi.order < 1:
            raise OrderError("a transition jet needs working order >= 1")
        one = phi.ring.one()
        if not (
            phi.coeff(0, 0) == phi.ring.zero()
            and psi.coeff(0, 0) == psi.ring.zero()
            and phi.coeff(1, 0) == one
            and phi.coeff(0, 1) == phi.ring.zero()
            and psi.coeff(0, 1) == one
            and psi.coeff(1, 0) == psi.ring.zero()
        ):
            raise ValueError("transition jet must be tangent to the identity")
        self.ring = phi.ring
        self.order = phi.order
        self.phi = phi
        self.psi = psi

    @classmethod
    def identity(cls, ring: Ring, order: int) -> "DiffeoJet":
        return cls(BiSeries.variable_x(ring, order), BiSeries.variable_y(ring, order))

    @classmethod
    def from_perturbation(cls, ring: Ring, order: int, a: dict, b: dict) -> "DiffeoJet":
        """Build x + sum a_ij x^i y^j, y + sum b_ij x^i y^j (all i + j >= 2)."""
        for tag, table in (("a", a), ("b", b)):
            for (i, j) in table:
                if i + j < 2:
                    raise ValueError(
                        f"perturbation coefficient {tag}[{i},{j}] below degree 2"
                    )
        phi = BiSeries.variable_x(ring, order) + BiSeries(ring, order, dict(a))
        psi = BiSeries.variable_y(ring, order) + BiSeries(ring, order, dict(b))
        return cls(phi, psi)

    def perturbation(self) -> tuple[dict, dict]:
        """Coefficient tables of phi - x and psi - y."""
        a = {k: c for k, c in self.phi.coeffs.items() if k != (1, 0)}
        b = {k: c for k, c in self.psi.coeffs.items() if k != (0, 1)}
        return a, b

    def is_identity(self) -> bool:
        a, b = self.perturbation()
        return not a and not b

    def __eq__(self, other):
        if not isinstance(other, DiffeoJet):
            return NotImplemented
        return self.phi == other.phi and self.psi == other.psi

    def __hash__(self):
        return hash((self.phi, self.psi))

    def __repr__(self):
        return f"DiffeoJet(order={self.order}, phi={self.phi!r}, psi={self.psi!r})"

    def jet(self, n: int) -> "DiffeoJet":
        return DiffeoJet(self.phi.jet(n), self.psi.jet(n))

    def compose(self, inner: "DiffeoJet") -> "DiffeoJet":
        """self after inner, sound to the smaller of the two orders."""
        return DiffeoJet(
            self.phi.compose(inner.phi, inner.psi),
            self.psi.compose(inner.phi, inner.psi),
        )

    def invert(self) -> "DiffeoJet":
        """Compositional inverse to the same working order.

        With phi = x + f, psi = y + g the inverse components x + u, y + v
        satisfy u = -f(x + u, y + v) and v = -g(x + u, y + v).  Starting
        from u = v = 0, each substitution round fixes one more degree, so
        order - 1 rounds land the full jet.
        """
        n = self.order
        x = BiSeries.variable_x(self.ring, n)
        y = BiSeries.variable_y(self.ring, n)
        f = self.phi - x
        g = self.psi - y
        u = BiSeries.zero(self.ring, n)
        v = BiSeries.zero(self.ring, n)
        for _ in range(max(n - 1, 0)):
            u_next = -f.compose(x + u, y + v)
            v_next = -g.compose(x + u, y + v)
            if u_next == u and v_next == v:
                break
            u, v = u_next, v_next
        return DiffeoJet(x + u, y + v)

    def sup_norm(self) -> Fraction:
        """Largest absolute value among perturbation coefficients.

        Only defined over the rationals; finite fields carry no size.
        """
        if not isinstance(self.ring, RationalRing):
            raise TypeError(f"sup norm undefined over {self.ring.name}")
        a, b = self.perturbation()
        best = Fraction(0)
        for table in (a, b):
            for c in table.values():
                m = abs_value(c)
                if m > best:
                    best = m
        return best

    def bump(self, component: str, i: int, j: int, c) -> "DiffeoJet":
        """Add c to one perturbation coefficient (component "a" or "b")."""
        if i + j < 2:
            raise ValueError("perturbation slots start at degree 2")
        delta = BiSeries(self.ring, self.order, {(i, j): c})
        if component == "a":
            return DiffeoJet(self.phi + delta, self.psi)
        if component == "b":
            return DiffeoJet(self.phi, self.psi + delta)
        raise ValueError(f"component must be 'a' or 'b', got {component!r}")

    def perturb_band(
        self, band: DegreeBand, rng: SplitMix, bound: Fraction
    ) -> "DiffeoJet":
        """Add an independent dyadic draw with |value| < bound to every
        perturbation slot inside the band, keeping the jet below band.lo
        bit-identical.

        Draw order is part of the stream contract: monomials sorted by
        (total degree, x exponent), the a slot before the b slot at each.
        """
        if not isinstance(self.ring, RationalRing):
            raise TypeError("band perturbation draws dyadic rationals")
        if band.hi > self.order:
            raise OrderError(
                f"band reaches degree {band.hi} but jet stops at {self.order}"
            )
        if band.lo < 1:
            raise ValueError("band must sit strictly above the linear part")
        a_delta: dict = {}
        b_delta: dict = {}
        for d in range(max(band.lo + 1, 2), band.hi + 1):
            for i in range(d + 1):
                key = (i, d - i)
                a_delta[key] = rng.dyadic(bound)
                b_delta[key] = rng.dyadic(bound)
        phi = self.phi + BiSeries(self.ring, self.order, a_delta)
        psi = self.psi + BiSeries(self.ring, self.order, b_delta)
        return DiffeoJet(phi, psi)


def identity_jet(ring: Ring, order: int) -> DiffeoJet:
    """The identity transition (x, y) at the requested working order."""
    return DiffeoJet.identity(ring, order)


def random_diffeo(
    ring: Ring,
    order: int,
    rng: SplitMix,
    *,
    bound: Fraction = Fraction(1, 2),
) -> DiffeoJet:
    """Dense random transition jet: every slot with 2 <= i + j <= order drawn.

    Over the rationals the draws are dyadic with |value| < bound; over a
    prime field they are uniform residues and bound is ignored.  Draw
    order matches perturb_band: (degree, x exponent), a before b.
    """
    a: dict = {}
    b: dict = {}
    rational = isinstance(ring, RationalRing)
    if not rational and not isinstance(ring, FpRing):
        raise TypeError(f"no random transition jets over {ring.name}")
    for d in range(2, order + 1):
        for i in range(d + 1):
            key = (i, d - i)
            if rational:
                a[key] = rng.dyadic(bound)
                b[key] = rng.dyadic(bound)
            else:
                a[key] = ring.from_int(rng.mod_p(ring.p))
                b[key] = ring.from_int(rng.mod_p(ring.p))
    return DiffeoJet.from_perturbation(ring, order, a, b)


def difference_norm(left: DiffeoJet, right: DiffeoJet) -> Fraction:
    """Sup norm of the coefficientwise difference, on the common order."""
    n = min(left.order, right.order)
    d_phi = left.phi.jet(n) - right.phi.jet(n)
    d_psi = left.psi.jet(n) - right.psi.jet(n)
    best = Fraction(0)
    for s in (d_phi, d_psi):
        for c in s.coeffs.values():
            m = abs_value(c)
            if m > best:
                best = m
    return best
