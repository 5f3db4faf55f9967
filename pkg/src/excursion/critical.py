"""Critical point of the undeformed equation and the limit-law constants.

``Q(u, y) = P(u, 1..1, y..y)`` is the size-only specialisation.  The critical
point solves ``Q = y, dQ/dy = 1``; from it come B, C, f_0 and, together with
the shift derivatives, the recursion coefficients mu_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import sympy

from .amplitudes import PREC_BITS, RecursionParams, limit_moments
from .exact import HalfInt, Surd
from .qfe import QFunctionalEquation, validate, ValidationError

INTERVAL_WIDTH = mpmath.mpf("1e-30")
WORK_DPS = 60


class AssumptionViolation(ValueError):
    """The model does not have an admissible square-root critical point."""

    def __init__(self, message: str, details: dict | None = None):
        super().__init__(message)
        self.details = details or {}


class UnsupportedDirection(ValueError):
    """Some mu_i vanishes, so direction i is not of excursion type."""


Bivariate = dict  # (u exponent, y exponent) -> Fraction


def specialize(eq: QFunctionalEquation) -> Bivariate:
    Q: Bivariate = {}
    for (ue, ye), c in eq.P.items():
        key = (ue[0], sum(ye))
        Q[key] = Q.get(key, 0) + c
    return {k: v for k, v in Q.items() if v != 0}


def q_eval(Q: Bivariate, u, y, du: int = 0, dy: int = 0):
    total = 0
    for (a, b), c in Q.items():
        if a < du or b < dy:
            continue
        coef = c * math.perm(a, du) * math.perm(b, dy)
        if isinstance(u, Fraction) and isinstance(y, Fraction):
            total += coef * u ** (a - du) * y ** (b - dy)
        else:
            total += _to_mpf(coef) * _to_mpf(u) ** (a - du) * _to_mpf(y) ** (b - dy)
    return total


@dataclass
class CriticalPoint:
    u_c: object
    y_c: object
    B: object
    C: object
    f0: object
    exact: bool
    y_interval: tuple | None = None


@dataclass
class CriticalData:
    u_c: object
    y_c: object
    B: object
    C: object
    f0: object
    A: tuple
    mu: tuple
    exact: bool
    aperiodic: bool | None = None
    y_interval: tuple | None = None
    notes: list = field(default_factory=list)

    @property
    def params(self) -> RecursionParams:
        return RecursionParams(self.mu, self.f0)


def _sym(Q: Bivariate):
    u, y = sympy.symbols("u y")
    expr = sum(sympy.Rational(c.numerator, c.denominator) * u**a * y**b for (a, b), c in Q.items())
    return u, y, expr


def _refine(poly: sympy.Poly, lo: Fraction, hi: Fraction):
    """Safeguarded Newton/bisection inside an isolating interval of a simple root."""
    with mpmath.workdps(WORK_DPS):
        coeffs = [mpmath.mpf(sympy.Rational(c).p) / sympy.Rational(c).q for c in poly.all_coeffs()]
        dcoeffs = [c * (len(coeffs) - 1 - i) for i, c in enumerate(coeffs[:-1])]
        a, b = mpmath.mpf(lo.numerator) / lo.denominator, mpmath.mpf(hi.numerator) / hi.denominator
        fa = mpmath.polyval(coeffs, a)
        fb = mpmath.polyval(coeffs, b)
        if fa == 0:
            return a, (a, a)
        if fb == 0:
            return b, (b, b)
        if fa * fb > 0:
            raise ArithmeticError("interval does not bracket a sign change")
        x = (a + b) / 2
        for _ in range(2000):
            if b - a <= INTERVAL_WIDTH:
                break
            fx = mpmath.polyval(coeffs, x)
            if fx == 0:
                a = b = x
                break
            if fa * fx < 0:
                b, fb = x, fx
            else:
                a, fa = x, fx
            d = mpmath.polyval(dcoeffs, x)
            nx = x - fx / d if d != 0 else None
            x = nx if nx is not None and a < nx < b else (a + b) / 2
        return (a + b) / 2, (a, b)


def _positive_roots(R: sympy.Poly):
    """Positive real roots: exact Fractions for rational roots, refined floats otherwise."""
    exact, approx = [], []
    _, factors = R.factor_list()
    for fac, _mult in factors:
        if fac.degree() == 1:
            a, b = fac.all_coeffs()
            r = -sympy.Rational(b) / sympy.Rational(a)
            if r > 0:
                exact.append(Fraction(int(r.p), int(r.q)))
            continue
        for (lo, hi), _m in fac.intervals():
            lo, hi = Fraction(int(lo.p), int(lo.q)), Fraction(int(hi.p), int(hi.q))
            if hi <= 0:
                continue
            if lo == hi:
                exact.append(lo)
                continue
            lo = max(lo, Fraction(0))
            mid, iv = _refine(fac, lo, hi)
            if mid > 0:
                approx.append((mid, iv))
    return exact, approx


def find_critical(Q: Bivariate) -> CriticalPoint:
    """Solve Q(u,y) = y, dQ/dy(u,y) = 1 for the admissible positive point."""
    if any(c < 0 for c in Q.values()):
        raise AssumptionViolation("Q has a negative coefficient")
    if max((b for (_, b) in Q), default=0) < 2:
        raise AssumptionViolation("Q has y-degree < 2: no square-root singularity")
    if not any(b == 0 for (_, b) in Q):
        raise AssumptionViolation("Q(u, 0) vanishes identically")
    u, y, expr = _sym(Q)
    F1 = sympy.expand(expr - y)
    F2 = sympy.expand(sympy.diff(expr, y) - 1)
    deg_u = sympy.Poly(expr, u).degree()
    if deg_u == 1:
        a_y = expr.coeff(u, 0)
        b_y = expr.coeff(u, 1)
        R = sympy.expand(sympy.diff(a_y, y) * b_y + (y - a_y) * sympy.diff(b_y, y) - b_y)
        u_of_y = sympy.lambdify(y, (y - a_y) / b_y, "mpmath")
        u_exact = lambda yy: ((y - a_y) / b_y).subs(y, yy)  # noqa: E731
    else:
        R = sympy.resultant(F1, F2, u)
        u_of_y = u_exact = None
    Rp = sympy.Poly(R, y)
    if Rp.is_zero:
        raise AssumptionViolation("degenerate critical system")
    exact_roots, approx_roots = _positive_roots(Rp)

    candidates = []
    for yr in exact_roots:
        for ur in _u_candidates(F1, F2, u, y, sympy.Rational(yr.numerator, yr.denominator), u_exact):
            candidates.append((ur, yr, None))
    for ym, iv in approx_roots:
        with mpmath.workdps(WORK_DPS):
            if u_of_y is not None:
                us = [u_of_y(ym)]
            else:
                us = _u_numeric(F1, F2, u, y, ym)
        for ur in us:
            candidates.append((ur, ym, iv))
    admissible = []
    with mpmath.workdps(WORK_DPS):
        for ur, yr, iv in candidates:
            if ur <= 0 or yr <= 0:
                continue
            B = q_eval(Q, ur, yr, dy=2) / 2
            C = q_eval(Q, ur, yr, du=1)
            if B > 0 and C > 0:
                admissible.append((ur, yr, iv, B, C))
    if not admissible:
        raise AssumptionViolation("no admissible positive critical point")
    ur, yr, iv, B, C = min(admissible, key=lambda t: t[0])
    exact = isinstance(ur, Fraction) and isinstance(yr, Fraction)
    if exact:
        ratio = C / B
        root = Surd.sqrt_of(ratio)
        f0 = -root.coeff if root.is_rational else -_mpf_sqrt(ratio)
    else:
        with mpmath.workdps(WORK_DPS):
            f0 = -mpmath.sqrt(mpmath.mpf(C) / B)
    return CriticalPoint(ur, yr, B, C, f0, exact, iv)


def _mpf_sqrt(q: Fraction):
    with mpmath.workdps(WORK_DPS):
        return mpmath.sqrt(mpmath.mpf(q.numerator) / q.denominator)


def _u_candidates(F1, F2, u, y, yr, u_exact):
    if u_exact is not None:
        val = sympy.nsimplify(u_exact(yr))
        if val.is_Rational:
            return [Fraction(int(val.p), int(val.q))]
        with mpmath.workdps(WORK_DPS):
            return [mpmath.mpf(sympy.N(val, WORK_DPS))]
    g = sympy.gcd(sympy.Poly(F1.subs(y, yr), u), sympy.Poly(F2.subs(y, yr), u))
    out = []
    if g.degree() <= 0:
        return out
    _, facs = g.factor_list()
    for fac, _m in facs:
        if fac.degree() == 1:
            a, b = fac.all_coeffs()
            r = -sympy.Rational(b) / sympy.Rational(a)
            out.append(Fraction(int(r.p), int(r.q)))
        else:
            for (lo, hi), _m2 in fac.intervals():
                lo, hi = Fraction(int(lo.p), int(lo.q)), Fraction(int(hi.p), int(hi.q))
                if lo == hi:
                    out.append(lo)
                else:
                    out.append(_refine(fac, lo, hi)[0])
    return out


def _u_numeric(F1, F2, u, y, ym):
    poly = sympy.Poly(F1, u)
    coeffs = [sympy.lambdify(y, c, "mpmath")(ym) for c in poly.all_coeffs()]
    f2 = sympy.lambdify((u, y), F2, "mpmath")
    out = []
    for r in mpmath.polyroots(coeffs, maxsteps=200, extraprec=200):
        if abs(mpmath.im(r)) < mpmath.mpf("1e-40") and mpmath.re(r) > 0:
            rr = mpmath.re(r)
            if abs(f2(rr, ym)) < mpmath.mpf("1e-25"):
                out.append(rr)
    return out


def _dP_dy(eq: QFunctionalEquation, j: int, u_c, y_c):
    """dP/dy_j at u = (u_c, 1, ..., 1), every y = y_c."""
    total = 0
    for (ue, ye), c in eq.P.items():
        if ye[j] == 0:
            continue
        deg = sum(ye)
        term = c * ye[j]
        total = total + term * (u_c ** ue[0]) * (y_c ** (deg - 1))
    return total


def shift_constants(eq: QFunctionalEquation, crit: CriticalPoint) -> tuple[tuple, tuple]:
    M = eq.M
    ctx = mpmath.workdps(WORK_DPS) if not crit.exact else _Null()
    with ctx:
        dP = [_dP_dy(eq, j, crit.u_c, crit.y_c) for j in range(eq.N)]
        A = []
        for i in range(M):
            a = 0
            for j, sh in enumerate(eq.shifts):
                row = sh.rows[i]
                # d v_i / d u_{i+1} at (u_c, 1, ..., 1)
                dv = row[i + 1] * crit.u_c ** row[0]
                a = a + dv * dP[j]
            A.append(a)
        mu = tuple(-a / (2 * crit.B * crit.f0) for a in A)
    if crit.exact and isinstance(crit.f0, Fraction):
        A = [Fraction(a) for a in A]
        mu = tuple(Fraction(m) for m in mu)
    return tuple(A), mu


class _Null:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def aperiodicity_check(coeffs: Sequence, start: int = 1) -> bool | None:
    """True/False for aperiodic/periodic support; None if fewer than 3 nonzero terms."""
    support = [start + i for i, c in enumerate(coeffs) if c != 0]
    if len(support) < 3:
        return None
    i0 = support[0]
    g = 0
    for s in support[1:]:
        g = math.gcd(g, s - i0)
    # gcd of all differences from the first index is 1 iff some pair j,k has gcd 1
    # with i0; for such a pair search explicitly
    if g != 1:
        return False
    return any(
        math.gcd(j - i, k - i) == 1
        for a, i in enumerate(support)
        for b, j in enumerate(support[a + 1 :], start=a + 1)
        for k in support[b + 1 :]
    )


def critical_data(eq: QFunctionalEquation, check_aperiodic: bool = True, prefix: int = 24) -> CriticalData:
    diags = validate(eq)
    if diags:
        raise ValidationError(diags)
    crit = find_critical(specialize(eq))
    A, mu = shift_constants(eq, crit)
    aper = None
    if check_aperiodic:
        from .qfe import solve_jets

        aper = aperiodicity_check(solve_jets(eq, prefix, 0).counting_sequence())
    return CriticalData(crit.u_c, crit.y_c, crit.B, crit.C, crit.f0, A, mu, crit.exact, aper, crit.y_interval)


def require_assumption(data: CriticalData) -> None:
    if data.aperiodic is False:
        raise AssumptionViolation(
            "counting sequence is periodic (aperiodicity fails)", {"critical": data}
        )


def scaling_constants(mu: Sequence, M: int | None = None) -> tuple[list, list]:
    """(c, d): d_1 = (1/8)/mu_0, d_{i+1} = d_i ((i+1)/4)/mu_i, c_k = 2^((k+2)/2)/d_k."""
    M = len(mu) if M is None else M
    if len(mu) < M:
        raise ValueError("need mu_0..mu_{M-1}")
    zero = [i for i in range(M) if mu[i] == 0]
    if zero:
        raise UnsupportedDirection(f"mu_{zero[0]} = 0: direction {zero[0] + 1} is not of excursion type")
    exact = all(isinstance(m, (int, Fraction)) for m in mu[:M])
    d = []
    if exact:
        cur = Fraction(1, 8) / mu[0]
        d.append(cur)
        for i in range(1, M):
            cur = cur * Fraction(i + 1, 4) / mu[i]
            d.append(cur)
        c = [Surd.rational_power(2, k + 2) / d[k - 1] for k in range(1, M + 1)]
    else:
        with mpmath.workprec(PREC_BITS):
            cur = mpmath.mpf(1) / 8 / mu[0]
            d.append(cur)
            for i in range(1, M):
                cur = cur * mpmath.mpf(i + 1) / 4 / mu[i]
                d.append(cur)
            c = [mpmath.mpf(2) ** (mpmath.mpf(k + 2) / 2) / d[k - 1] for k in range(1, M + 1)]
    return c, d


def printed_scaling_constants(mu: Sequence, M: int | None = None) -> list:
    """c_k = 2^((k+2)/2) * 2 mu_0 ... mu_{k-1} / (4^k k!), the closed form as printed."""
    M = len(mu) if M is None else M
    out = []
    prod = 1
    for k in range(1, M + 1):
        prod = prod * mu[k - 1]
        if all(isinstance(m, (int, Fraction)) for m in mu[:k]):
            out.append(Surd.rational_power(2, k + 2) * (2 * Fraction(prod) / (4**k * math.factorial(k))))
        else:
            out.append(mpmath.mpf(2) ** (mpmath.mpf(k + 2) / 2) * 2 * prod / (4**k * math.factorial(k)))
    return out


def coefficient_asymptotic(crit, gamma_k: HalfInt, f_k, n: int):
    """Leading term f_k / (u_c^g Gamma(g)) * u_c^-n * n^(g-1) of [u0^n] g_k (mpmath)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    g = gamma_k.value
    if g.denominator == 1 and g <= 0:
        return mpmath.mpf(0)
    with mpmath.workdps(WORK_DPS):
        uc = _to_mpf(crit.u_c)
        gm = mpmath.mpf(g.numerator) / g.denominator
        return _to_mpf(f_k) / (uc**gm * mpmath.gamma(gm)) * uc ** (-n) * mpmath.mpf(n) ** (gm - 1)


def _to_mpf(x):
    if isinstance(x, (int, Fraction)):
        x = Fraction(x)
        return mpmath.mpf(x.numerator) / x.denominator
    if isinstance(x, Surd):
        return x.to_mpf()
    return mpmath.mpf(x)


def model_limit_moments(eq: QFunctionalEquation, max_index=None, *, max_gamma=None, data: CriticalData | None = None):
    """Moments of the limit law of a model, from its critical data."""
    if data is None:
        data = critical_data(eq)
    require_assumption(data)
    zero = [i for i, m in enumerate(data.mu) if m == 0]
    if zero:
        raise UnsupportedDirection(f"mu_{zero[0]} = 0: A_{zero[0]} vanishes, limit law degenerate in direction {zero[0] + 1}")
    return limit_moments(data.params, data.u_c, max_index, max_gamma=max_gamma)
