"""Truncated Taylor jets in delta = (1 - u_1, ..., 1 - u_M).

A :class:`Jet` of order K keeps the coefficients of all monomials delta^k with
|k| <= K.  Coefficients are ints or Fractions; integer models stay in ints.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb

from .exact import MultiIndex, indices_of_degree_at_most


class Jet:
    __slots__ = ("M", "K", "coeffs")

    def __init__(self, M: int, K: int, coeffs: dict | None = None):
        if M < 0 or K < 0:
            raise ValueError("M and K must be non-negative")
        self.M = M
        self.K = K
        c = {}
        for k, v in (coeffs or {}).items():
            k = tuple(k)
            if len(k) != M:
                raise ValueError(f"index {k} does not have length {M}")
            if v != 0 and sum(k) <= K:
                c[k] = _norm(v)
        self.coeffs = c

    @classmethod
    def constant(cls, M, K, value=1) -> "Jet":
        return cls(M, K, {(0,) * M: value})

    @classmethod
    def delta(cls, M, K, i: int) -> "Jet":
        """The jet of delta_i (0-based slot)."""
        k = [0] * M
        k[i] = 1
        return cls(M, K, {tuple(k): 1})

    @classmethod
    def monomial_u(cls, M, K, exps) -> "Jet":
        """prod_l u_l^{e_l} = prod_l (1 - delta_l)^{e_l}, truncated."""
        per_axis = []
        for e in exps:
            per_axis.append([(-1) ** j * comb(e, j) for j in range(min(e, K) + 1)])
        out = {}
        for k in indices_of_degree_at_most(M, K):
            v = 1
            for i, ki in enumerate(k):
                row = per_axis[i]
                if ki >= len(row):
                    v = 0
                    break
                v *= row[ki]
            if v:
                out[k] = v
        return cls(M, K, out)

    def __getitem__(self, k) -> int | Fraction:
        return self.coeffs.get(tuple(k), 0)

    def constant_term(self):
        return self[(0,) * self.M]

    def _check(self, other: "Jet"):
        if (self.M, self.K) != (other.M, other.K):
            raise ValueError("jets of different shape")

    def __add__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        self._check(other)
        c = dict(self.coeffs)
        for k, v in other.coeffs.items():
            c[k] = c.get(k, 0) + v
        return Jet(self.M, self.K, c)

    def __neg__(self):
        return Jet(self.M, self.K, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Jet(self.M, self.K, {k: v * other for k, v in self.coeffs.items()})
        if not isinstance(other, Jet):
            return NotImplemented
        self._check(other)
        K = self.K
        out: dict[MultiIndex, int | Fraction] = {}
        b_items = [(kb, sum(kb), vb) for kb, vb in other.coeffs.items()]
        for ka, va in self.coeffs.items():
            da = sum(ka)
            for kb, db, vb in b_items:
                if da + db > K:
                    continue
                k = tuple(x + y for x, y in zip(ka, kb))
                out[k] = out.get(k, 0) + va * vb
        return Jet(self.M, K, out)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        return (self.M, self.K, self.coeffs) == (other.M, other.K, other.coeffs)

    def __repr__(self):
        return f"Jet(M={self.M}, K={self.K}, {dict(sorted(self.coeffs.items()))})"

    def truncate(self, K: int) -> "Jet":
        return Jet(self.M, K, {k: v for k, v in self.coeffs.items() if sum(k) <= K})

    def compose(self, powers: "MonomialPowers") -> "Jet":
        """Substitute delta_k -> powers.subs[k]; each substitute has no constant term."""
        out = Jet(self.M, self.K)
        acc: dict = {}
        for k, v in self.coeffs.items():
            for kk, w in powers.get(k).coeffs.items():
                acc[kk] = acc.get(kk, 0) + v * w
        out.coeffs = {k: _norm(v) for k, v in acc.items() if v != 0}
        return out


class MonomialPowers:
    """Cache of prod_k subs[k]^{m_k} for a fixed substitution."""

    def __init__(self, subs: list[Jet]):
        if not subs:
            raise ValueError("empty substitution")
        for s in subs:
            if s.constant_term() != 0:
                raise ValueError("substituted jets must vanish at delta = 0")
        self.subs = subs
        M, K = subs[0].M, subs[0].K
        self._cache = {(0,) * M: Jet.constant(M, K)}

    def get(self, m: MultiIndex) -> Jet:
        hit = self._cache.get(m)
        if hit is not None:
            return hit
        i = max(j for j, x in enumerate(m) if x)
        prev = list(m)
        prev[i] -= 1
        val = self.get(tuple(prev)) * self.subs[i]
        self._cache[m] = val
        return val


def _norm(v):
    if isinstance(v, Fraction) and v.denominator == 1:
        return int(v)
    return v
