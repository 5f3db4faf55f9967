"""Leading amplitudes f_k, excursion moments and limit-law moments.

The amplitudes are the coefficients of the generating function ``K(eps)`` of
the dominant-balance equation.  With rational parameters everything is exact;
with floating parameters the recursion runs in mpmath at ``PREC_BITS``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Mapping, Sequence

import mpmath

from .exact import (
    HalfInt,
    MultiIndex,
    Surd,
    gamma_exponent,
    gamma_half,
    indices_with_gamma_at_most,
    multi_factorial,
    order_key,
    to_fraction,
)

PREC_BITS = 160

DYCK_UC = Fraction(1, 4)


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction))


def _lift(x, exact: bool):
    """Bring a rational/half-integer into the working field."""
    if isinstance(x, HalfInt):
        x = x.value
    if exact:
        return to_fraction(x)
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


@dataclass(frozen=True)
class RecursionParams:
    """Coefficients mu_0..mu_{M-1} and boundary value f_0 < 0 of the recursion."""

    mu: tuple
    f0: object

    def __post_init__(self):
        mu = tuple(self.mu)
        if not mu:
            raise ValueError("need at least one mu (M >= 1)")
        if self.f0 == 0:
            raise ValueError("f0 must be nonzero")
        if self.f0 > 0:
            raise ValueError("f0 must be negative")
        if any(m < 0 for m in mu):
            raise ValueError("mu_i must be non-negative")
        object.__setattr__(self, "mu", mu)

    @property
    def M(self) -> int:
        return len(self.mu)

    @property
    def exact(self) -> bool:
        return _is_exact(self.f0) and all(_is_exact(m) for m in self.mu)


def dyck_params(M: int) -> RecursionParams:
    if M < 1:
        raise ValueError("M must be >= 1")
    mu = (Fraction(1, 8),) + tuple(Fraction(i + 1, 4) for i in range(1, M))
    return RecursionParams(mu, Fraction(-4))


@dataclass(frozen=True)
class AmplitudeTable:
    params: RecursionParams
    values: Mapping[MultiIndex, object]

    @property
    def M(self) -> int:
        return self.params.M

    def __getitem__(self, k: MultiIndex):
        if any(x < 0 for x in k):
            return 0
        return self.values[tuple(k)]

    def __contains__(self, k) -> bool:
        return tuple(k) in self.values

    def __len__(self):
        return len(self.values)

    def scaled(self, factor) -> "AmplitudeTable":
        return AmplitudeTable(self.params, {k: v * factor for k, v in self.values.items()})


@dataclass(frozen=True)
class MomentTable:
    M: int
    values: Mapping[MultiIndex, object] = field(default_factory=dict)

    def __getitem__(self, k: MultiIndex):
        return self.values[tuple(k)]

    def __contains__(self, k) -> bool:
        return tuple(k) in self.values

    def __len__(self):
        return len(self.values)

    def items(self):
        return sorted(self.values.items(), key=lambda kv: order_key(kv[0]))


def _domain(M: int, max_index: Sequence[int] | None, max_gamma) -> list[MultiIndex]:
    if max_index is not None:
        if len(max_index) != M:
            raise ValueError(f"max index has length {len(max_index)}, expected {M}")
        if any(x < 0 for x in max_index):
            raise ValueError("max index entries must be non-negative")
        bound = gamma_exponent(max_index)
        if max_gamma is not None:
            bound = max(bound, HalfInt.of(max_gamma))
    elif max_gamma is not None:
        bound = HalfInt.of(max_gamma)
    else:
        raise ValueError("give max_index or max_gamma")
    return sorted(indices_with_gamma_at_most(M, bound), key=order_key)


def general_amplitudes(params: RecursionParams, max_index=None, *, max_gamma=None) -> AmplitudeTable:
    """Run the amplitude recursion.

    The table covers every k with ``gamma_k <= max(gamma_{max_index}, max_gamma)``.
    That set contains the box ``k <= max_index`` and is closed under every
    dependency of the recursion, so nothing outside it is ever referenced.
    """
    M = params.M
    exact = params.exact
    dom = _domain(M, max_index, max_gamma)
    ctx = mpmath.workprec(max(mpmath.mp.prec, PREC_BITS)) if not exact else _nullctx()
    with ctx:
        f0 = _lift(params.f0, exact)
        mu = [_lift(m, exact) for m in params.mu]
        conv_factor = -1 / (2 * f0)
        zero = _lift(0, exact)
        f: dict[MultiIndex, object] = {(0,) * M: f0}

        def get(k):
            if any(x < 0 for x in k):
                return zero
            return f[k]

        for k in dom:
            if not any(k):
                continue
            acc = zero
            if k[0] > 0:
                km = (k[0] - 1,) + k[1:]
                acc += mu[0] * _lift(gamma_exponent(km), exact) * get(km)
            for i in range(1, M):
                # k - e_{i+1} + e_i, with 1-based i; here i is the 0-based slot of e_i
                if k[i] > 0:
                    kk = list(k)
                    kk[i] -= 1
                    kk[i - 1] += 1
                    acc += mu[i] * (k[i - 1] + 1) * get(tuple(kk))
            conv = zero
            for rho in product(*(range(x + 1) for x in k)):
                if not any(rho) or rho == k:
                    continue
                conv += f[rho] * f[tuple(a - b for a, b in zip(k, rho))]
            f[k] = acc + conv_factor * conv
    return AmplitudeTable(params, f)


class _nullctx:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def excursion_amplitudes(M: int, max_index=None, *, max_gamma=None) -> AmplitudeTable:
    return general_amplitudes(dyck_params(M), max_index, max_gamma=max_gamma)


def _selected(table: AmplitudeTable, max_index, max_gamma) -> list[MultiIndex]:
    if max_index is None:
        return sorted(table.values, key=order_key)
    return sorted(
        (k for k in table.values if all(a <= b for a, b in zip(k, max_index))), key=order_key
    )


def excursion_moment(k: MultiIndex, f_k) -> Surd:
    """E[X_1^k_1 ... X_M^k_M] from the amplitude f_k."""
    g = gamma_exponent(k)
    twopi_sqrt = Surd(1, 1, 2)
    val = twopi_sqrt / gamma_half(g) * Surd.rational_power(2, g.twice) * Surd.coerce(f_k) / 2
    return val * multi_factorial(k)


def excursion_moments(M: int, max_index=None, *, max_gamma=None) -> MomentTable:
    """Joint moments of the Brownian-excursion power integrals, exactly.

    With ``max_index`` the table holds the box ``k <= max_index``; with only
    ``max_gamma`` it holds every k with ``gamma_k <= max_gamma``.
    """
    table = excursion_amplitudes(M, max_index, max_gamma=max_gamma)
    return MomentTable(M, {k: excursion_moment(k, table[k]) for k in _selected(table, max_index, max_gamma)})


def limit_moments(params: RecursionParams, u_c, max_index=None, *, max_gamma=None, table=None) -> MomentTable:
    """Limit-law moments m_k = k! f_k Gamma(g_0) / (f_0 u_c^(g_k-g_0) Gamma(g_k)).

    Exact (:class:`Surd`) when ``u_c`` and the parameters are rational, else mpmath.
    """
    if table is None:
        table = general_amplitudes(params, max_index, max_gamma=max_gamma)
    M = params.M
    g0 = gamma_exponent((0,) * M)
    exact = params.exact and _is_exact(u_c)
    out = {}
    if exact:
        f0 = Surd.coerce(params.f0)
        for k in _selected(table, max_index, max_gamma):
            g = gamma_exponent(k)
            val = Surd.coerce(table[k]) * gamma_half(g0) / gamma_half(g)
            val = val / (f0 * Surd.rational_power(u_c, (g - g0).twice))
            out[k] = val * multi_factorial(k)
    else:
        with mpmath.workprec(max(mpmath.mp.prec, PREC_BITS)):
            uc = _lift(u_c, False)
            f0 = _lift(params.f0, False)
            for k in _selected(table, max_index, max_gamma):
                g = gamma_exponent(k)
                val = _lift(table[k], False) * mpmath.gamma(float(g0)) / mpmath.gamma(_lift(g, False))
                val /= f0 * uc ** _lift(g - g0, False)
                out[k] = val * multi_factorial(k)
    return MomentTable(M, out)


def dyck_limit_moments(M: int, max_index=None, *, max_gamma=None) -> MomentTable:
    return limit_moments(dyck_params(M), DYCK_UC, max_index, max_gamma=max_gamma)


# dominant-balance residual ----------------------------------------------------

Poly = dict  # MultiIndex -> coefficient


def _padd(a: Poly, b: Poly, scale=1) -> Poly:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + scale * v
    return {k: v for k, v in out.items() if v != 0}


def _pmul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            k = tuple(x + y for x, y in zip(ka, kb))
            out[k] = out.get(k, 0) + va * vb
    return {k: v for k, v in out.items() if v != 0}


def _pderiv(a: Poly, i: int) -> Poly:
    out: Poly = {}
    for k, v in a.items():
        if k[i]:
            kk = list(k)
            kk[i] -= 1
            out[tuple(kk)] = v * k[i]
    return out


def _mono(M: int, *slots: int) -> MultiIndex:
    k = [0] * M
    for s in slots:
        k[s] += 1
    return tuple(k)


def pde_residual(params: RecursionParams, table: AmplitudeTable, order: int) -> Poly:
    """Residual of the reduced dominant-balance equation for the truncated K.

    ``K(eps) = sum_{0<|k|<=order} f_k eps^k`` is substituted by plain polynomial
    arithmetic (independent of the recursion code).  Returned is the part of
    ``RHS - K`` of total degree ``<= order``, zero coefficients dropped; it is
    empty exactly when the amplitudes are correct through that degree.
    """
    M = params.M
    need = [k for k in _all_degree(M, order) if any(k)]
    missing = [k for k in need if k not in table]
    if missing:
        raise ValueError(f"amplitude table lacks {missing[0]} (needed for order {order})")
    if table[(0,) * M] != params.f0:
        raise ValueError("table was built with a different f0")
    Kp: Poly = {k: table[k] for k in need if table[k] != 0}
    mu, f0 = params.mu, params.f0
    rhs: Poly = {}
    for i in range(M):
        # (i+2)/2 * mu0 * eps1 * eps_i * dK/deps_i, i 1-based -> slot i
        coef = Fraction(i + 3, 2) * mu[0]
        rhs = _padd(rhs, _pmul({_mono(M, 0, i): coef}, _pderiv(Kp, i)))
    for i in range(M - 1):
        rhs = _padd(rhs, _pmul({_mono(M, i + 1): mu[i + 1]}, _pderiv(Kp, i)))
    rhs = _padd(rhs, _pmul({_mono(M, 0): -mu[0] / 2}, _padd(Kp, {(0,) * M: f0})))
    rhs = _padd(rhs, _pmul(Kp, Kp), scale=-1 / (2 * f0))
    return low_degree_part(_padd(rhs, Kp, scale=-1), order)


def _all_degree(M, order):
    from .exact import indices_of_degree_at_most

    return list(indices_of_degree_at_most(M, order))


def low_degree_part(poly: Poly, order: int) -> Poly:
    return {k: v for k, v in poly.items() if sum(k) <= order}


def amplitudes_to_degree(params: RecursionParams, order: int) -> AmplitudeTable:
    """Table containing every k with |k| <= order."""
    M = params.M
    top = (0,) * (M - 1) + (order,)
    return general_amplitudes(params, top)


# growth bound -------------------------------------------------------------------


def growth_fit(table: AmplitudeTable, grid=range(-80, 161)) -> tuple[float, float]:
    """Constants (D, R) with |f_k| <= D |k|! R^|k| on every entry of the table.

    R is the smallest grid value ``2**(j/4)`` for which the bound holds with D
    pinned at the degree-zero level |f_0|; D is then the exact maximum ratio.
    A table with no entries beyond k = 0 reports R = 1.
    """
    if not len(table):
        raise ValueError("empty amplitude table")
    entries = [(sum(k), abs(float(v))) for k, v in table.values.items()]
    d0 = max((a for n, a in entries if n == 0), default=0.0)
    rest = [(n, a) for n, a in entries if n > 0 and a > 0]
    if not rest:
        return d0, 1.0
    if d0 == 0:
        d0 = max(a / math.factorial(n) for n, a in rest)
    chosen = None
    for j in grid:
        R = 2.0 ** (j / 4)
        if all(a <= d0 * math.factorial(n) * R**n * (1 + 1e-12) for n, a in rest):
            chosen = R
            break
    if chosen is None:
        raise ValueError("no grid value bounds the table; widen the grid")
    D = max(a / (math.factorial(n) * chosen**n) for n, a in entries)
    return D, chosen


def certifies(table: AmplitudeTable, D: float, R: float) -> bool:
    return all(
        abs(float(v)) <= D * math.factorial(sum(k)) * R ** sum(k) * (1 + 1e-12)
        for k, v in table.values.items()
    )


# moment generating function ------------------------------------------------------


def mgf_partial_sum(moments: MomentTable, t: Sequence[float], terms: int) -> float:
    """sum_{|k| <= terms} m_k t^k / k! in floating point."""
    M = moments.M
    if len(t) != M:
        raise ValueError(f"t has length {len(t)}, expected {M}")
    active = [i for i in range(M) if t[i] != 0]
    acc = []
    from .exact import indices_of_degree_at_most

    for sub in indices_of_degree_at_most(len(active), terms):
        k = [0] * M
        for slot, x in zip(active, sub):
            k[slot] = x
        k = tuple(k)
        if k not in moments:
            raise ValueError(f"moment table too shallow: missing {k}")
        term = float(moments[k]) / multi_factorial(k)
        for i in active:
            term *= t[i] ** k[i]
        acc.append(term)
    return math.fsum(acc)
