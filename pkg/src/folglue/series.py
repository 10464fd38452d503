"""Truncated bivariate power series over an exact scalar ring.

A BiSeries is a jet: a sparse coefficient table {(i, j): c} together with a
working order N, meaning the series is known exactly on all monomials
x^i y^j with i + j <= N and unknown beyond.  Every operation tracks the
largest order at which its result is certain and truncates there; no
operation ever invents coefficients above an operand's working order.
Requests that would extrapolate (jet to a higher order, homogeneous part
beyond the order, composition data out of range) raise OrderError instead
of guessing.

The one deliberate exception is padded(), which extends the working order
by declaring the unknown coefficients to be zero.  That is a semantic
claim about the underlying object, not bookkeeping, so the caller must be
able to justify it; the compatibility-residual evaluator does, quoting a
truncation property checked extensively in the test suite.

Degrees are plain total degrees.  Coefficient tables never store zeros, so
iteration cost tracks the support, and order_of_vanishing is a min over
stored keys (None for the zero jet, which has no witnessed vanishing
order).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from .rings import Ring, RingMismatchError


class OrderError(ValueError):
    """Raised when an operation would need coefficients beyond a working order."""


@dataclass(frozen=True)
class DegreeBand:
    """Half-open degree range (lo, hi]: monomials with lo < i + j <= hi."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.lo < 0 or self.hi <= self.lo:
            raise ValueError(f"degenerate degree band ({self.lo}, {self.hi}]")

    def contains(self, i: int, j: int) -> bool:
        return self.lo < i + j <= self.hi


class BiSeries:
    """Jet of a formal power series in two variables.

    Treat instances as immutable; all arithmetic returns fresh objects.
    """

    __slots__ = ("ring", "order", "coeffs")

    def __init__(self, ring: Ring, order: int, coeffs: dict | None = None, *, _clean=False):
        if order < 0:
            raise OrderError(f"negative working order {order}")
        self.ring = ring
        self.order = order
        if coeffs is None:
            self.coeffs = {}
        elif _clean:
            self.coeffs = coeffs
        else:
            table = {}
            for (i, j), c in coeffs.items():
                if i < 0 or j < 0:
                    raise ValueError(f"negative exponent in monomial x^{i} y^{j}")
                if i + j > order:
                    raise OrderError(
                        f"monomial x^{i} y^{j} exceeds working order {order}"
                    )
                if c:
                    table[(i, j)] = c
            self.coeffs = table

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, ring: Ring, order: int) -> "BiSeries":
        return cls(ring, order, {}, _clean=True)

    @classmethod
    def constant(cls, ring: Ring, order: int, value) -> "BiSeries":
        return cls(ring, order, {(0, 0): value})

    @classmethod
    def monomial(cls, ring: Ring, order: int, i: int, j: int, value=None) -> "BiSeries":
        if value is None:
            value = ring.one()
        return cls(ring, order, {(i, j): value})

    @classmethod
    def variable_x(cls, ring: Ring, order: int) -> "BiSeries":
        return cls.monomial(ring, order, 1, 0)

    @classmethod
    def variable_y(cls, ring: Ring, order: int) -> "BiSeries":
        return cls.monomial(ring, order, 0, 1)

    @classmethod
    def from_terms(cls, ring: Ring, order: int, terms: Iterable[tuple[int, int, object]]) -> "BiSeries":
        table: dict = {}
        for i, j, c in terms:
            if (i, j) in table:
                table[(i, j)] = table[(i, j)] + c
            else:
                table[(i, j)] = c
        return cls(ring, order, table)

    # -- bookkeeping ---------------------------------------------------------

    def _check_ring(self, other: "BiSeries") -> None:
        if self.ring != other.ring:
            raise RingMismatchError(
                f"series over {self.ring} meets series over {other.ring}"
            )

    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, i: int, j: int):
        if i + j > self.order:
            raise OrderError(
                f"coefficient of x^{i} y^{j} is beyond working order {self.order}"
            )
        c = self.coeffs.get((i, j))
        return self.ring.zero() if c is None else c

    def support(self):
        return self.coeffs.keys()

    def order_of_vanishing(self) -> int | None:
        """Smallest total degree with a nonzero coefficient, None for the zero jet."""
        if not self.coeffs:
            return None
        return min(i + j for (i, j) in self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, BiSeries):
            return NotImplemented
        return (
            self.ring == other.ring
            and self.order == other.order
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((self.ring, self.order, frozenset(self.coeffs.items())))

    def __repr__(self):
        if not self.coeffs:
            return f"<0 +O(deg>{self.order})>"
        bits = []
        for (i, j) in sorted(self.coeffs, key=lambda k: (k[0] + k[1], k[0])):
            c = self.coeffs[(i, j)]
            mono = "".join(
                s
                for s, e in (("x", i), ("y", j))
                for s in ([f"{s}^{e}"] if e > 1 else [s] if e == 1 else [])
            )
            bits.append(f"({c!r}){mono}" if mono else f"({c!r})")
        return "<" + " + ".join(bits) + f" +O(deg>{self.order})>"

    # -- truncation ----------------------------------------------------------

    def jet(self, n: int) -> "BiSeries":
        """Truncate to working order n (n <= current order; never extends)."""
        if n > self.order:
            raise OrderError(f"cannot extend knowledge from order {self.order} to {n}")
        if n == self.order:
            return self
        table = {k: c for k, c in self.coeffs.items() if k[0] + k[1] <= n}
        return BiSeries(self.ring, n, table, _clean=True)

    def band(self, band: DegreeBand) -> "BiSeries":
        """Keep monomials with band.lo < i + j <= band.hi."""
        if band.hi > self.order:
            raise OrderError(
                f"band upper edge {band.hi} beyond working order {self.order}"
            )
        table = {k: c for k, c in self.coeffs.items() if band.contains(*k)}
        return BiSeries(self.ring, band.hi, table, _clean=True)

    def homogeneous_part(self, n: int) -> "BiSeries":
        if n > self.order:
            raise OrderError(
                f"degree-{n} part is beyond working order {self.order}"
            )
        table = {k: c for k, c in self.coeffs.items() if k[0] + k[1] == n}
        return BiSeries(self.ring, n, table, _clean=True)

    def padded(self, n: int) -> "BiSeries":
        """Re-tag with working order n >= order, declaring the gap to be zero.

        This asserts knowledge the jet does not carry.  Callers own the
        justification (in this package: the truncation property of the
        compatibility residual, or genuinely polynomial data).
        """
        if n < self.order:
            raise OrderError("padded() does not truncate; use jet()")
        if n == self.order:
            return self
        return BiSeries(self.ring, n, self.coeffs, _clean=True)

    # -- linear structure ----------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, BiSeries):
            return NotImplemented
        self._check_ring(other)
        n = min(self.order, other.order)
        table = {k: c for k, c in self.coeffs.items() if k[0] + k[1] <= n}
        for k, c in other.coeffs.items():
            if k[0] + k[1] <= n:
                if k in table:
                    s = table[k] + c
                    if s:
                        table[k] = s
                    else:
                        del table[k]
                else:
                    table[k] = c
        return BiSeries(self.ring, n, table, _clean=True)

    def __neg__(self):
        return BiSeries(
            self.ring, self.order, {k: -c for k, c in self.coeffs.items()}, _clean=True
        )

    def __sub__(self, other):
        if not isinstance(other, BiSeries):
            return NotImplemented
        return self.__add__(-other)

    def scale(self, c) -> "BiSeries":
        if not c:
            return BiSeries.zero(self.ring, self.order)
        table = {}
        for k, v in self.coeffs.items():
            w = v * c
            if w:
                table[k] = w
        return BiSeries(self.ring, self.order, table, _clean=True)

    def map_coefficients(self, fn: Callable, ring: Ring) -> "BiSeries":
        """Apply fn to every stored coefficient, landing in `ring`."""
        table = {}
        for k, v in self.coeffs.items():
            w = fn(v)
            if w:
                table[k] = w
        return BiSeries(ring, self.order, table, _clean=True)

    # -- multiplicative structure ---------------------------------------------

    def __mul__(self, other):
        if not isinstance(other, BiSeries):
            return NotImplemented
        self._check_ring(other)
        n = min(self.order, other.order)
        a, b = self.coeffs, other.coeffs
        if len(a) > len(b):
            a, b = b, a
        if not a:
            return BiSeries.zero(self.ring, n)
        # bucket the larger factor by total degree for early degree cutoff
        buckets: dict[int, list] = {}
        for (i, j), c in b.items():
            buckets.setdefault(i + j, []).append((i, j, c))
        degs = sorted(buckets)
        out: dict = {}
        for (i1, j1), c1 in a.items():
            rem = n - i1 - j1
            if rem < 0:
                continue
            for d in degs:
                if d > rem:
                    break
                for i2, j2, c2 in buckets[d]:
                    k = (i1 + i2, j1 + j2)
                    prod = c1 * c2
                    if k in out:
                        out[k] = out[k] + prod
                    else:
                        out[k] = prod
        for k in [k for k, v in out.items() if not v]:
            del out[k]
        return BiSeries(self.ring, n, out, _clean=True)

    def shifted(self, di: int, dj: int, c=None) -> "BiSeries":
        """Multiply by c * x^di y^dj.  Monomials are exact data, so the sound
        working order rises to order + di + dj."""
        if di < 0 or dj < 0:
            raise ValueError("monomial shift needs nonnegative exponents")
        table = {}
        for (i, j), v in self.coeffs.items():
            w = v if c is None else v * c
            if w:
                table[(i + di, j + dj)] = w
        return BiSeries(self.ring, self.order + di + dj, table, _clean=True)

    # -- calculus -------------------------------------------------------------

    def partial_x(self) -> "BiSeries":
        if self.order < 1:
            raise OrderError("cannot differentiate an order-0 jet")
        table = {}
        for (i, j), c in self.coeffs.items():
            if i > 0:
                w = c * i
                if w:
                    table[(i - 1, j)] = w
        return BiSeries(self.ring, self.order - 1, table, _clean=True)

    def partial_y(self) -> "BiSeries":
        if self.order < 1:
            raise OrderError("cannot differentiate an order-0 jet")
        table = {}
        for (i, j), c in self.coeffs.items():
            if j > 0:
                w = c * j
                if w:
                    table[(i, j - 1)] = w
        return BiSeries(self.ring, self.order - 1, table, _clean=True)

    # -- composition ------------------------------------------------------------

    def compose(self, u: "BiSeries", v: "BiSeries") -> "BiSeries":
        """f(u, v) for substitutions without constant term.

        Sound to order min(f.order, u.order, v.order): a degree-e term of f
        contributes only at degrees >= e because u and v vanish at the
        origin, and unknown coefficients of u, v sit above their orders.
        """
        self._check_ring(u)
        self._check_ring(v)
        if u.coeffs.get((0, 0)) or v.coeffs.get((0, 0)):
            raise ValueError("composition target must have zero constant term")
        n = min(self.order, u.order, v.order)
        un = u.jet(n)
        vn = v.jet(n)
        # split f into rows f_j(x) y^j, Horner in y over Horner in x
        rows: dict[int, dict[int, object]] = {}
        max_j = 0
        for (i, j), c in self.coeffs.items():
            if i + j <= n:
                rows.setdefault(j, {})[i] = c
                if j > max_j:
                    max_j = j
        zero = BiSeries.zero(self.ring, n)
        if not rows:
            return zero

        def eval_row(row: dict[int, object]) -> BiSeries:
            acc = zero
            for i in range(max(row), -1, -1):
                acc = acc * un
                if i in row:
                    acc = acc + BiSeries.constant(self.ring, n, row[i])
            return acc

        result = zero
        for j in range(max_j, -1, -1):
            result = result * vn
            if j in rows:
                result = result + eval_row(rows[j])
        return result


def mul_poly(series: BiSeries, poly_terms: dict, out_order: int) -> BiSeries:
    """series * P for an exactly known polynomial P given as {(i, j): c}.

    Because every coefficient of P above its support is known to be zero,
    the product is sound up to series.order + min total degree of P; the
    caller picks out_order within that bound (checked).
    """
    if not poly_terms:
        return BiSeries.zero(series.ring, out_order)
    min_deg = min(i + j for (i, j) in poly_terms)
    if out_order > series.order + min_deg:
        raise OrderError(
            f"product only sound to {series.order + min_deg}, asked for {out_order}"
        )
    out: dict = {}
    for (i1, j1), c1 in poly_terms.items():
        if not c1:
            continue
        for (i2, j2), c2 in series.coeffs.items():
            i, j = i1 + i2, j1 + j2
            if i + j <= out_order:
                prod = c1 * c2
                k = (i, j)
                if k in out:
                    out[k] = out[k] + prod
                else:
                    out[k] = prod
    for k in [k for k, v in out.items() if not v]:
        del out[k]
    return BiSeries(series.ring, out_order, out, _clean=True)


def _tail_floor(s: BiSeries) -> int:
    """Lowest degree at which the true series behind this jet can live.

    The visible part vanishes to its order_of_vanishing; the invisible tail
    starts above the working order.  The floor is the smaller of the two.
    """
    v = s.order_of_vanishing()
    return s.order + 1 if v is None else v


def _at_order(s: BiSeries, n: int) -> BiSeries:
    return s.padded(n) if n >= s.order else s.jet(n)


def mul_sharp(a: BiSeries, b: BiSeries) -> BiSeries:
    """Product certified past min(orders) by vanishing-order bookkeeping.

    Writing each factor as visible + tail, the error terms are
    visible_a * tail_b (degree > a's vanishing floor + b.order) and its
    mirror, so the product of the visible parts is correct through

        n = min(a.order + floor(b), b.order + floor(a)).

    Plain mul would certify only min(a.order, b.order); the gap matters
    when factors vanish to positive order, which is the normal situation
    for the linearization columns.
    """
    a._check_ring(b)
    n = min(a.order + _tail_floor(b), b.order + _tail_floor(a))
    return _at_order(a, n) * _at_order(b, n)


def compose_sharp(f: BiSeries, u: BiSeries, v: BiSeries) -> BiSeries:
    """Composition f(u, v) certified past min(orders).

    With r the vanishing floor of the substituted pair, a tail term of f
    (degree > f.order) lands at degree >= (f.order + 1) * r, and the tails
    of u and v enter multiplied by partials of f, which vanish to
    (w - 1) * r for w the lowest positive degree in f.  Hence

        n = min((f.order + 1) * r - 1, u.order + (w - 1) * r,
                v.order + (w - 1) * r).
    """
    f._check_ring(u)
    f._check_ring(v)
    if u.coeffs.get((0, 0)) or v.coeffs.get((0, 0)):
        raise ValueError("composition target must have zero constant term")
    r = min(_tail_floor(u), _tail_floor(v))
    positive = [i + j for (i, j) in f.coeffs if i + j >= 1]
    n = (f.order + 1) * r - 1
    if positive:
        w = min(positive)
        n = min(n, u.order + (w - 1) * r, v.order + (w - 1) * r)
    return _at_order(f, n).compose(_at_order(u, n), _at_order(v, n))


def monomials_up_to(order: int) -> list[tuple[int, int]]:
    """All (i, j) with i + j <= order, sorted by (total degree, i)."""
    out = []
    for d in range(order + 1):
        for i in range(d + 1):
            out.append((i, d - i))
    return out
