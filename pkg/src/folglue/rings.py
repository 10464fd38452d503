"""Exact coefficient rings: rationals, prime fields, dual numbers.

Everything downstream (series, forms, linear algebra) is generic over a
scalar ring.  Three rings are provided:

* QQ            -- arbitrary-precision rationals, elements are
                   fractions.Fraction (the stdlib type already carries exact
                   arithmetic and operator overloading);
* FpRing(p)     -- the prime field Z/p for a machine-word prime p, elements
                   are Fp instances that refuse to mix moduli;
* DualRing(R)   -- R[t]/(t^2) over a base ring, used for exact forward-mode
                   differentials.  g(a + t*b) = g(a) + t*Dg(a)*b holds
                   coefficient for coefficient, with no epsilon anywhere.

There is no floating point in this module and nothing downstream may
introduce any.  Mixing elements of different rings raises RingMismatchError
rather than coercing.
"""

from __future__ import annotations

import re
from fractions import Fraction

_RATIONAL_LITERAL = re.compile(r"-?\d+(/\d+)?")

#: primes used by default when a certificate wants modular consensus
DEFAULT_CERTIFICATION_PRIMES = (32003, 65521, 1000003)


class RingMismatchError(TypeError):
    """Raised when elements of distinct rings meet in one operation."""


class NotInvertibleError(ZeroDivisionError):
    """Raised when division needs an inverse that does not exist."""


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


# ---------------------------------------------------------------------------
# elements


class Fp:
    """Element of Z/p.  Values are kept reduced to [0, p)."""

    __slots__ = ("val", "p")

    def __init__(self, val: int, p: int):
        self.val = val % p
        self.p = p

    def _check(self, other: "Fp") -> None:
        if self.p != other.p:
            raise RingMismatchError(f"mixed moduli {self.p} and {other.p}")

    def __add__(self, other):
        if isinstance(other, Fp):
            self._check(other)
            return Fp(self.val + other.val, self.p)
        if isinstance(other, int):
            return Fp(self.val + other, self.p)
        if isinstance(other, Fraction):
            raise RingMismatchError("cannot mix rationals with a prime field")
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Fp):
            self._check(other)
            return Fp(self.val - other.val, self.p)
        if isinstance(other, int):
            return Fp(self.val - other, self.p)
        if isinstance(other, Fraction):
            raise RingMismatchError("cannot mix rationals with a prime field")
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, int):
            return Fp(other - self.val, self.p)
        if isinstance(other, Fraction):
            raise RingMismatchError("cannot mix rationals with a prime field")
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Fp):
            self._check(other)
            return Fp(self.val * other.val, self.p)
        if isinstance(other, int):
            return Fp(self.val * other, self.p)
        if isinstance(other, Fraction):
            raise RingMismatchError("cannot mix rationals with a prime field")
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return Fp(-self.val, self.p)

    def inverse(self) -> "Fp":
        if self.val == 0:
            raise NotInvertibleError(f"0 has no inverse mod {self.p}")
        return Fp(pow(self.val, -1, self.p), self.p)

    def __truediv__(self, other):
        if isinstance(other, Fp):
            self._check(other)
            return self * other.inverse()
        if isinstance(other, int):
            return self * Fp(other, self.p).inverse()
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, int):
            return Fp(other, self.p) * self.inverse()
        return NotImplemented

    def __eq__(self, other):
        if isinstance(other, Fp):
            return self.p == other.p and self.val == other.val
        if isinstance(other, int):
            return self.val == other % self.p
        return NotImplemented

    def __hash__(self):
        return hash((self.val, self.p))

    def __bool__(self):
        return self.val != 0

    def __repr__(self):
        return f"{self.val}%{self.p}"


class Dual:
    """a + t*b with t^2 = 0, a and b in a common base ring."""

    __slots__ = ("a", "b")

    def __init__(self, a, b):
        self.a = a
        self.b = b

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.a + other.a, self.b + other.b)
        if isinstance(other, (int, Fraction, Fp)):
            return Dual(self.a + other, self.b)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.a - other.a, self.b - other.b)
        if isinstance(other, (int, Fraction, Fp)):
            return Dual(self.a - other, self.b)
        return NotImplemented

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.a * other.a, self.a * other.b + self.b * other.a)
        if isinstance(other, (int, Fraction, Fp)):
            return Dual(self.a * other, self.b * other)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return Dual(-self.a, -self.b)

    def __truediv__(self, other):
        if isinstance(other, Dual):
            if not other.a:
                raise NotInvertibleError("dual number with nilpotent part only")
            inv_a = _invert(other.a)
            # (a + tb)^-1 = a^-1 - t a^-2 b
            return Dual(
                self.a * inv_a,
                (self.b * other.a - self.a * other.b) * inv_a * inv_a,
            )
        if isinstance(other, (int, Fraction, Fp)):
            inv = _invert(other)
            return Dual(self.a * inv, self.b * inv)
        return NotImplemented

    def __eq__(self, other):
        if isinstance(other, Dual):
            return self.a == other.a and self.b == other.b
        return NotImplemented

    def __hash__(self):
        return hash((self.a, self.b, "dual"))

    def __bool__(self):
        return bool(self.a) or bool(self.b)

    def __repr__(self):
        return f"({self.a!r} + t*{self.b!r})"


def _invert(x):
    if isinstance(x, Fraction):
        if x == 0:
            raise NotInvertibleError("division by zero rational")
        return 1 / x
    if isinstance(x, Fp):
        return x.inverse()
    if isinstance(x, int):
        if x in (1, -1):
            return x
        raise NotInvertibleError(f"integer {x} not invertible")
    raise RingMismatchError(f"cannot invert {type(x).__name__}")


# ---------------------------------------------------------------------------
# ring descriptors


class Ring:
    """Descriptor: constructors, membership, serialization for one ring."""

    name: str

    def zero(self):
        raise NotImplementedError

    def one(self):
        raise NotImplementedError

    def from_int(self, n: int):
        raise NotImplementedError

    def contains(self, x) -> bool:
        raise NotImplementedError

    def serialize(self, x):
        raise NotImplementedError

    def parse(self, obj):
        raise NotImplementedError

    def __repr__(self):
        return self.name


class RationalRing(Ring):
    name = "q"

    def zero(self):
        return Fraction(0)

    def one(self):
        return Fraction(1)

    def from_int(self, n):
        return Fraction(n)

    def contains(self, x):
        return isinstance(x, Fraction)

    def serialize(self, x):
        # Fraction str() is already "p/q" or "p" in lowest terms
        return str(x)

    def parse(self, obj):
        if not isinstance(obj, str):
            raise ValueError(f"rational scalar must be a string, got {obj!r}")
        if not _RATIONAL_LITERAL.fullmatch(obj):
            raise ValueError(f"bad rational literal {obj!r}")
        try:
            return Fraction(obj)
        except ZeroDivisionError as exc:
            raise ValueError(f"bad rational literal {obj!r}") from exc

    def __eq__(self, other):
        return isinstance(other, RationalRing)

    def __hash__(self):
        return hash("q")


class FpRing(Ring):
    def __init__(self, p: int):
        if not _is_prime(p):
            raise ValueError(f"{p} is not prime")
        if p.bit_length() > 31:
            # keeps p^2 inside int64 for the vectorized elimination
            raise ValueError(f"prime {p} too large for machine-word arithmetic")
        self.p = p
        self.name = f"fp:{p}"

    def zero(self):
        return Fp(0, self.p)

    def one(self):
        return Fp(1, self.p)

    def from_int(self, n):
        return Fp(n, self.p)

    def contains(self, x):
        return isinstance(x, Fp) and x.p == self.p

    def serialize(self, x):
        return {"mod": self.p, "val": x.val}

    def parse(self, obj):
        if (
            not isinstance(obj, dict)
            or set(obj) != {"mod", "val"}
            or not isinstance(obj.get("val"), int)
        ):
            raise ValueError(f"prime-field scalar must be {{mod, val}}, got {obj!r}")
        if obj["mod"] != self.p:
            raise ValueError(f"scalar mod {obj['mod']} in a {self.name} context")
        return Fp(obj["val"], self.p)

    def __eq__(self, other):
        return isinstance(other, FpRing) and other.p == self.p

    def __hash__(self):
        return hash(("fp", self.p))


class DualRing(Ring):
    """R[t]/(t^2).  Internal only: duals are never serialized."""

    def __init__(self, base: Ring):
        if isinstance(base, DualRing):
            raise ValueError("nested dual rings are not supported")
        self.base = base
        self.name = f"dual({base.name})"

    def zero(self):
        return Dual(self.base.zero(), self.base.zero())

    def one(self):
        return Dual(self.base.one(), self.base.zero())

    def from_int(self, n):
        return Dual(self.base.from_int(n), self.base.zero())

    def contains(self, x):
        return isinstance(x, Dual) and self.base.contains(x.a) and self.base.contains(x.b)

    def lift(self, x, dx=None):
        """Base element(s) -> dual element a + t*dx."""
        return Dual(x, self.base.zero() if dx is None else dx)

    def serialize(self, x):
        raise ValueError("dual numbers have no wire format")

    def parse(self, obj):
        raise ValueError("dual numbers have no wire format")

    def __eq__(self, other):
        return isinstance(other, DualRing) and other.base == self.base

    def __hash__(self):
        return hash(("dual", self.base))


QQ = RationalRing()


def ring_from_name(name: str) -> Ring:
    """Parse a --ring style name: "q" or "fp:<prime>"."""
    if name == "q":
        return QQ
    if name.startswith("fp:"):
        try:
            p = int(name[3:])
        except ValueError as exc:
            raise ValueError(f"bad ring name {name!r}") from exc
        return FpRing(p)
    raise ValueError(f"unknown ring {name!r} (expected 'q' or 'fp:<prime>')")


def abs_value(x) -> Fraction:
    """Archimedean absolute value; defined for rationals only."""
    if isinstance(x, Fraction):
        return abs(x)
    raise RingMismatchError("absolute value is only defined over the rationals")


def reduce_mod(x: Fraction, ring: FpRing) -> Fp:
    """Reduce a rational mod p.  The denominator must be a unit mod p."""
    p = ring.p
    den = x.denominator % p
    if den == 0:
        raise NotInvertibleError(f"denominator of {x} vanishes mod {p}")
    return Fp(x.numerator * pow(den, -1, p), p)
