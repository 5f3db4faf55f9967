"""Exact scalars, half-integer Gamma values and multi-index helpers.

Everything here is immutable and pure.  Moment values of the excursion and of
the discrete models live in the field generated by the rationals, ``sqrt(pi)``
and square roots of rationals; :class:`Surd` covers exactly the products
``q * pi**(p/2) * sqrt(r)`` we ever need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, total_ordering
from itertools import product
from typing import Iterable, Iterator, Sequence

import mpmath

MultiIndex = tuple[int, ...]

_SMALL_PRIMES = [p for p in range(2, 1000) if all(p % d for d in range(2, int(p**0.5) + 1))]


def _squarefree_split(n: int) -> tuple[int, int]:
    """Return ``(s, r)`` with ``n == s*s*r`` and ``r`` squarefree."""
    if n <= 0:
        raise ValueError("radicand must be positive")
    s, r = 1, 1
    for p in _SMALL_PRIMES:
        if p * p > n:
            break
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        s *= p ** (e // 2)
        if e % 2:
            r *= p
    if n > 1:
        q = math.isqrt(n)
        if q * q == n:
            s *= q
        elif n < 1_000_000:
            r *= n
        else:
            from sympy import factorint

            for p, e in factorint(n).items():
                s *= p ** (e // 2)
                if e % 2:
                    r *= p
    return s, r


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


@dataclass(frozen=True, eq=False)
class Surd:
    """The exact real number ``coeff * pi**(pi_half/2) * sqrt(root)``.

    ``root`` is kept squarefree so that equal numbers have equal fields.  The
    power of ``pi`` is an arbitrary integer because ``pi`` is transcendental and
    never folds into the rational part.
    """

    coeff: Fraction
    pi_half: int = 0
    root: int = 1

    def __post_init__(self):
        c = to_fraction(self.coeff)
        p, r = self.pi_half, self.root
        if c == 0:
            p, r = 0, 1
        elif r != 1:
            s, r = _squarefree_split(r)
            c *= s
        object.__setattr__(self, "coeff", c)
        object.__setattr__(self, "pi_half", p)
        object.__setattr__(self, "root", r)

    @classmethod
    def coerce(cls, x) -> "Surd":
        return x if isinstance(x, Surd) else cls(to_fraction(x))

    @classmethod
    def sqrt_of(cls, q) -> "Surd":
        """Exact square root of a non-negative rational."""
        q = to_fraction(q)
        if q < 0:
            raise ValueError("square root of a negative rational")
        # sqrt(a/b) = sqrt(a*b)/b
        return cls(Fraction(1, q.denominator), 0, q.numerator * q.denominator) if q else cls(0)

    @classmethod
    def rational_power(cls, q, twice_exponent: int) -> "Surd":
        """``q ** (twice_exponent / 2)`` for a positive rational ``q``."""
        q = to_fraction(q)
        if q <= 0:
            raise ValueError("base must be positive")
        whole, odd = divmod(twice_exponent, 2)
        out = cls(q**whole)
        return out * cls.sqrt_of(q) if odd else out

    # arithmetic -----------------------------------------------------------

    def _same_kind(self, other: "Surd") -> bool:
        return self.pi_half == other.pi_half and self.root == other.root

    def __add__(self, other):
        if not isinstance(other, Surd):
            if isinstance(other, (int, Fraction)):
                other = Surd(other)
            else:
                return NotImplemented
        if other.coeff == 0:
            return self
        if self.coeff == 0:
            return other
        if not self._same_kind(other):
            raise ValueError(f"cannot add {self} and {other} exactly")
        return Surd(self.coeff + other.coeff, self.pi_half, self.root)

    __radd__ = __add__

    def __neg__(self):
        return Surd(-self.coeff, self.pi_half, self.root)

    def __sub__(self, other):
        return self + (-Surd.coerce(other))

    def __rsub__(self, other):
        return Surd.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Surd(self.coeff * other, self.pi_half, self.root)
        if not isinstance(other, Surd):
            return NotImplemented
        return Surd(self.coeff * other.coeff, self.pi_half + other.pi_half, self.root * other.root)

    __rmul__ = __mul__

    def inverse(self) -> "Surd":
        if self.coeff == 0:
            raise ZeroDivisionError("inverse of zero")
        # 1/sqrt(r) = sqrt(r)/r
        return Surd(1 / (self.coeff * self.root), -self.pi_half, self.root)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return Surd(self.coeff / other, self.pi_half, self.root)
        if not isinstance(other, Surd):
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return Surd.coerce(other) * self.inverse()

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Surd(other)
        if not isinstance(other, Surd):
            return NotImplemented
        return (self.coeff, self.pi_half, self.root) == (other.coeff, other.pi_half, other.root)

    def __hash__(self):
        return hash((self.coeff, self.pi_half, self.root))

    # views ---------------------------------------------------------------

    @property
    def is_rational(self) -> bool:
        return self.pi_half == 0 and self.root == 1

    def sign(self) -> int:
        return (self.coeff > 0) - (self.coeff < 0)

    def twopi_form(self) -> tuple[Fraction, int] | None:
        """``(q, e)`` with value ``q * (2*pi)**(e/2)``, or None if not of that shape."""
        if self.is_rational:
            return self.coeff, 0
        if self.pi_half == 1 and self.root == 2:
            return self.coeff, 1
        return None

    def to_mpf(self) -> mpmath.mpf:
        v = mpmath.mpf(self.coeff.numerator) / self.coeff.denominator
        if self.pi_half:
            v *= mpmath.sqrt(mpmath.pi) ** self.pi_half
        if self.root != 1:
            v *= mpmath.sqrt(self.root)
        return v

    def __float__(self):
        if self.is_rational:
            return float(self.coeff)
        with mpmath.workdps(30):
            return float(self.to_mpf())

    def __str__(self):
        tf = self.twopi_form()
        if tf is not None:
            q, e = tf
            if e == 0:
                return str(q)
            factors = ["sqrt(2*pi)"]
        else:
            q = self.coeff
            factors = []
            if self.pi_half == 1:
                factors.append("sqrt(pi)")
            elif self.pi_half == 2:
                factors.append("pi")
            elif self.pi_half % 2 == 0:
                factors.append(f"pi^{self.pi_half // 2}")
            elif self.pi_half:
                factors.append(f"pi^({self.pi_half}/2)")
            if self.root != 1:
                factors.append(f"sqrt({self.root})")
        lead = {1: [], -1: ["-"]}.get(q)
        if lead is None:
            return "*".join([str(q)] + factors)
        return "".join(lead) + "*".join(factors)

    def __repr__(self):
        return f"Surd({self})"


@total_ordering
@dataclass(frozen=True)
class HalfInt:
    """An element of (1/2)Z, stored as twice its value."""

    twice: int

    @classmethod
    def of(cls, x) -> "HalfInt":
        if isinstance(x, HalfInt):
            return x
        f = to_fraction(x) * 2
        if f.denominator != 1:
            raise ValueError(f"{x} is not a half-integer")
        return cls(int(f))

    @property
    def value(self) -> Fraction:
        return Fraction(self.twice, 2)

    @property
    def is_integer(self) -> bool:
        return self.twice % 2 == 0

    def __add__(self, other):
        other = other if isinstance(other, HalfInt) else HalfInt.of(other)
        return HalfInt(self.twice + other.twice)

    __radd__ = __add__

    def __sub__(self, other):
        other = other if isinstance(other, HalfInt) else HalfInt.of(other)
        return HalfInt(self.twice - other.twice)

    def __neg__(self):
        return HalfInt(-self.twice)

    def __lt__(self, other):
        other = other if isinstance(other, HalfInt) else HalfInt.of(other)
        return self.twice < other.twice

    def __float__(self):
        return self.twice / 2

    def __str__(self):
        return str(self.value)


class GammaPoleError(ValueError):
    pass


def gamma_half(h: HalfInt) -> Surd:
    """Gamma at an integer or half-integer, exactly."""
    if h.is_integer:
        n = h.twice // 2
        if n <= 0:
            raise GammaPoleError(f"Gamma has a pole at {n}")
        return Surd(math.factorial(n - 1))
    # h = n + 1/2
    n = (h.twice - 1) // 2
    if n >= 0:
        c = Fraction(math.factorial(2 * n), 4**n * math.factorial(n))
    else:
        m = -n
        c = Fraction((-4) ** m * math.factorial(m), math.factorial(2 * m))
    return Surd(c, 1)


# multi-indices -------------------------------------------------------------


def precedes(a: Sequence[int], b: Sequence[int]) -> bool:
    """Total order on multi-indices: lower degree first, then larger leading entries."""
    if len(a) != len(b):
        raise ValueError("multi-indices of different lengths")
    da, db = sum(a), sum(b)
    if da != db:
        return da < db
    for x, y in zip(a, b):
        if x != y:
            return x > y
    return False


def order_key(k: Sequence[int]) -> tuple:
    """Sort key realising :func:`precedes` as ``<``."""
    return (sum(k), tuple(-x for x in k))


def gamma_exponent(k: Sequence[int]) -> HalfInt:
    # 2*gamma_k = -1 + sum (2 + i) k_i, i counted from 1
    return HalfInt(-1 + sum((i + 2) * ki for i, ki in enumerate(k, start=1)))


def unit(M: int, i: int) -> MultiIndex:
    """Unit multi-index e_i, 1-based as in the moment variables."""
    return tuple(1 if j == i - 1 else 0 for j in range(M))


def multi_factorial(k: Iterable[int]) -> int:
    out = 1
    for ki in k:
        out *= math.factorial(ki)
    return out


def box(upper: Sequence[int]) -> Iterator[MultiIndex]:
    """All multi-indices 0 <= k <= upper componentwise."""
    return product(*(range(u + 1) for u in upper))


def indices_of_degree_at_most(M: int, d: int) -> Iterator[MultiIndex]:
    def rec(prefix, left, slots):
        if slots == 0:
            yield tuple(prefix)
            return
        for x in range(left + 1):
            yield from rec(prefix + [x], left - x, slots - 1)

    yield from rec([], d, M)


def indices_with_gamma_at_most(M: int, bound: HalfInt) -> list[MultiIndex]:
    """All k in N_0^M with gamma_k <= bound; closed under the amplitude recursion."""
    budget = bound.twice + 1  # sum (i+2) k_i <= budget
    out: list[MultiIndex] = []

    def rec(i, prefix, left):
        if i > M:
            out.append(tuple(prefix))
            return
        w = i + 2
        for x in range(left // w + 1):
            rec(i + 1, prefix + [x], left - w * x)

    if budget >= 0:
        rec(1, [], budget)
    return out


@lru_cache(maxsize=None)
def stirling2(n: int, j: int) -> int:
    """Stirling number of the second kind S(n, j)."""
    if n < 0 or j < 0 or j > n:
        raise ValueError(f"S({n},{j}) is out of range")
    if n == j:
        return 1
    if j == 0:
        return 0
    return j * stirling2(n - 1, j) + stirling2(n - 1, j - 1)


def falling_factorial(n: int, j: int) -> int:
    out = 1
    for i in range(j):
        out *= n - i
    return out
