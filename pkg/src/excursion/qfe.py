"""Polynomial q-functional equations with monomial q-shifts.

An equation ``G(u) = P(u, G(v1(u)), ..., G(vN(u)))`` is solved coefficient by
coefficient in ``u0``.  Each coefficient ``p_n(u_1..u_M)`` is kept as an order-K
jet at ``u_+ = 1``, which is exactly the data needed for factorial moments.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .exact import (
    box,
    gamma_exponent,
    stirling2,
    to_fraction,
)
from .jets import Jet, MonomialPowers


class ValidationError(ValueError):
    def __init__(self, diagnostics: list[str]):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = diagnostics


class UndefinedSizeError(ValueError):
    """No objects of the requested size, so the moment is undefined."""


@dataclass(frozen=True)
class SparsePolynomial:
    """P(u_0..u_M, y_1..y_N); keys are (u_exponents, y_exponents)."""

    M: int
    N: int
    terms: dict

    def __post_init__(self):
        clean = {}
        for (ue, ye), c in self.terms.items():
            ue, ye = tuple(ue), tuple(ye)
            c = to_fraction(c)
            if c == 0:
                continue
            key = (ue, ye)
            clean[key] = clean.get(key, 0) + c
        object.__setattr__(self, "terms", {k: v for k, v in clean.items() if v != 0})

    def items(self):
        return self.terms.items()


@dataclass(frozen=True)
class MonomialQShift:
    """Monomial q-shift v_k(u) = u^{rows[k]}, k = 0..M."""

    rows: tuple

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(tuple(int(x) for x in r) for r in self.rows))

    @property
    def M(self) -> int:
        return len(self.rows) - 1

    @classmethod
    def identity(cls, M: int) -> "MonomialQShift":
        return cls(tuple(tuple(int(i == k) for i in range(M + 1)) for k in range(M + 1)))

    @property
    def is_identity(self) -> bool:
        return self == MonomialQShift.identity(self.M)


@dataclass(frozen=True)
class QFunctionalEquation:
    M: int
    N: int
    P: SparsePolynomial
    shifts: tuple
    name: str = ""
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "shifts", tuple(self.shifts))


def validate(eq: QFunctionalEquation) -> list[str]:
    """Names every violated structural axiom; an empty list means valid."""
    out: list[str] = []
    M, N = eq.M, eq.N
    if M < 1:
        out.append("M must be >= 1")
    if N < 1:
        out.append("N must be >= 1")
    if eq.P.M != M or eq.P.N != N:
        out.append("P dimensions do not match (M, N)")
    if len(eq.shifts) != N:
        out.append(f"expected {N} shifts, got {len(eq.shifts)}")
    for j, sh in enumerate(eq.shifts, start=1):
        if len(sh.rows) != M + 1 or any(len(r) != M + 1 for r in sh.rows):
            out.append(f"shift {j}: exponent matrix must be {M + 1}x{M + 1}")
            continue
        for k, row in enumerate(sh.rows):
            if any(x < 0 for x in row):
                out.append(f"shift {j}, v_{k}: negative exponent")
            if row[k] != 1:
                out.append(f"shift {j}, v_{k}: ∂v_k/∂u_k(u₀) ≠ 1 (exponent of u_{k} is {row[k]})")
            for l in range(k):
                if row[l] != 0:
                    out.append(f"shift {j}, v_{k}: depends on u_{l} (q-shifts are triangular)")
    if not eq.P.terms:
        out.append("P is zero")
    for (ue, ye), c in eq.P.items():
        if len(ue) != M + 1 or len(ye) != N:
            out.append(f"P term {ue},{ye}: wrong exponent lengths")
            continue
        if any(x < 0 for x in ue) or any(x < 0 for x in ye):
            out.append(f"P term {ue},{ye}: negative exponent")
        if c < 0:
            out.append(f"P term {ue},{ye}: negative coefficient {c} (non-negativity)")
        if ue[0] == 0 and sum(ye) == 0:
            out.append(f"P term {ue},{ye}: P(0,·,0) ≠ 0")
        if ue[0] == 0 and sum(ye) == 1:
            out.append(f"P term {ue},{ye}: ∂P/∂y(0,·,0) ≠ 0")
    return out


# solving ----------------------------------------------------------------------


@dataclass
class SeriesSolution:
    eq: QFunctionalEquation
    n_max: int
    K: int
    jets: list = field(default_factory=list)  # jets[n] for n = 0..n_max, jets[0] == 0

    def jet(self, n: int) -> Jet:
        if not 0 <= n <= self.n_max:
            raise IndexError(f"level {n} outside 0..{self.n_max}")
        return self.jets[n]

    def counting_sequence(self) -> list:
        return [j.constant_term() for j in self.jets[1:]]

    def polynomial(self, n: int) -> dict:
        """Reconstruct p_n(u_+) from its jet; exact once K >= deg p_n."""
        return jet_to_polynomial(self.jet(n))


def jet_to_polynomial(jet: Jet) -> dict:
    """Expand sum c_k prod (1-q_i)^{k_i} into {exponent tuple: coefficient}."""
    out: dict = {}
    for k, c in jet.coeffs.items():
        for e in box(k):
            w = c
            for ki, ei in zip(k, e):
                w *= math.comb(ki, ei) * (-1) ** ei
            out[e] = out.get(e, 0) + w
    return {e: v for e, v in out.items() if v != 0}


class _Solver:
    def __init__(self, eq: QFunctionalEquation, n_max: int, K: int):
        self.eq, self.n_max, self.K = eq, n_max, K
        M = eq.M
        self.M = M
        self.zero = Jet(M, K)
        self.p: list[Jet] = [self.zero]
        self.H: list[list[Jet]] = [[self.zero] for _ in range(eq.N)]
        self.shift_data = []
        for sh in eq.shifts:
            if sh.is_identity:
                self.shift_data.append((None, None))
                continue
            subs = []
            for k in range(1, M + 1):
                # delta'_k = 1 - prod_{l>=1} (1-delta_l)^{n_{k,l}}
                subs.append(Jet.constant(M, K) - Jet.monomial_u(M, K, sh.rows[k][1:]))
            self.shift_data.append((MonomialPowers(subs), tuple(sh.rows[0][1:])))
        self.terms = []
        for (ue, ye), c in sorted(eq.P.items()):
            self.terms.append((ue[0], Jet.monomial_u(M, K, ue[1:]) * _norm(c), tuple(ye)))
        self.products: dict[tuple, list] = {}
        self._upow_cache: dict = {}

    def _upow(self, exps, n):
        key = (exps, n)
        if key not in self._upow_cache:
            self._upow_cache[key] = Jet.monomial_u(self.M, self.K, tuple(e * n for e in exps))
        return self._upow_cache[key]

    def product_coeff(self, b: tuple, m: int) -> Jet:
        """[u0^m] prod_j H_j^{b_j}; needs only H levels < m when |b| >= 2."""
        deg = sum(b)
        if deg == 0:
            return Jet.constant(self.M, self.K) if m == 0 else self.zero
        if m < deg:
            return self.zero
        if deg == 1:
            j = b.index(1)
            return self.H[j][m]
        series = self.products.setdefault(b, [])
        while len(series) <= m:
            series.append(None)
        if series[m] is not None:
            return series[m]
        j = max(i for i, x in enumerate(b) if x)
        rest = list(b)
        rest[j] -= 1
        rest = tuple(rest)
        acc = self.zero
        for a in range(deg - 1, m):
            left = self.product_coeff(rest, a)
            if left.coeffs:
                right = self.H[j][m - a]
                if right.coeffs:
                    acc = acc + left * right
        series[m] = acc
        return acc

    def step(self, n: int):
        acc = self.zero
        for e0, ujet, b in self.terms:
            if e0 > n:
                continue
            c = self.product_coeff(b, n - e0)
            if c.coeffs:
                acc = acc + ujet * c
        self.p.append(acc)
        for j, (powers, a) in enumerate(self.shift_data):
            if powers is None:
                self.H[j].append(acc)
            else:
                self.H[j].append(acc.compose(powers) * self._upow(a, n))

    def run(self) -> SeriesSolution:
        for n in range(1, self.n_max + 1):
            self.step(n)
        return SeriesSolution(self.eq, self.n_max, self.K, self.p)


def _norm(c: Fraction):
    return int(c) if c.denominator == 1 else c


def solve_jets(eq: QFunctionalEquation, n_max: int, K: int) -> SeriesSolution:
    """Order-K jets of p_1..p_{n_max} at u_+ = 1."""
    diags = validate(eq)
    if diags:
        raise ValidationError(diags)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if K < 0:
        raise ValueError("K must be >= 0")
    return _Solver(eq, n_max, K).run()


# moments ---------------------------------------------------------------------


def factorial_moment_coefficients(sol: SeriesSolution, k: Sequence[int]) -> list:
    """[u0^n] g_k(u0) for n = 0..n_max (index 0 is always 0)."""
    k = tuple(k)
    if len(k) != sol.eq.M:
        raise ValueError("index length does not match M")
    if sum(k) > sol.K:
        raise ValueError(f"|k| = {sum(k)} exceeds jet order {sol.K}")
    sign = -1 if sum(k) % 2 else 1
    return [sign * j[k] for j in sol.jets]


def finite_size_moments(sol: SeriesSolution, n0: int, k: Sequence[int]) -> Fraction:
    """Exact ordinary moment E[X~_1^k_1 ... X~_M^k_M] over objects of size n0."""
    k = tuple(k)
    if sum(k) > sol.K:
        raise ValueError(f"|k| = {sum(k)} exceeds jet order {sol.K}")
    jet = sol.jet(n0)
    total = jet.constant_term()
    if total == 0:
        raise UndefinedSizeError(f"no objects of size {n0}")
    num = 0
    for j in box(k):
        w = 1
        for ki, ji in zip(k, j):
            w *= stirling2(ki, ji) * math.factorial(ji)
        if w:
            sign = -1 if sum(j) % 2 else 1
            num += w * sign * jet[j]
    return Fraction(num) / total


def normalized_moment_sequence(sol: SeriesSolution, k: Sequence[int], n0_list: Sequence[int], limit=None):
    """m_k(n0) = m~_k(n0) / n0^(gamma_k - gamma_0), with a convergence report.

    ``limit`` defaults to the limit-law moment of the model, computed from its
    critical data.  The report holds the deviations from the limit and the
    fitted log-log slope of |deviation| against n0 (about -1/2 expected).
    """
    k = tuple(k)
    M = sol.eq.M
    power = float(gamma_exponent(k) - gamma_exponent((0,) * M))
    values = [float(finite_size_moments(sol, n, k)) / n**power for n in n0_list]
    if limit is None:
        from .critical import model_limit_moments

        limit = model_limit_moments(sol.eq, k)[k]
    lim = float(limit)
    devs = [v - lim for v in values]
    slope = None
    pts = [(math.log(n), math.log(abs(d))) for n, d in zip(n0_list, devs) if d != 0]
    if len(pts) >= 2:
        mx = sum(x for x, _ in pts) / len(pts)
        my = sum(y for _, y in pts) / len(pts)
        sxx = sum((x - mx) ** 2 for x, _ in pts)
        if sxx > 0:
            slope = sum((x - mx) * (y - my) for x, y in pts) / sxx
    report = {
        "limit": lim,
        "deviations": devs,
        "relative_deviations": [d / lim for d in devs] if lim else None,
        "loglog_slope": slope,
        "shrinking": all(abs(b) < abs(a) for a, b in zip(devs, devs[1:])),
    }
    return values, report


# model files -----------------------------------------------------------------


def equation_from_dict(doc: dict) -> QFunctionalEquation:
    try:
        M, N = int(doc["M"]), int(doc["N"])
        terms = {}
        for t in doc["P"]:
            key = (tuple(int(x) for x in t["u_exponents"]), tuple(int(x) for x in t["y_exponents"]))
            coeff = t.get("coeff", "1")
            terms[key] = terms.get(key, 0) + to_fraction(str(coeff))
        shifts = tuple(MonomialQShift(tuple(tuple(r) for r in s)) for s in doc["shifts"])
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as e:
        raise ValidationError([f"malformed model document: {e!r}"]) from e
    return QFunctionalEquation(
        M,
        N,
        SparsePolynomial(M, N, terms),
        shifts,
        name=str(doc.get("name", "")),
        description=str(doc.get("description", "")),
    )


def equation_to_dict(eq: QFunctionalEquation) -> dict:
    doc = {
        "M": eq.M,
        "N": eq.N,
        "P": [
            {"u_exponents": list(ue), "y_exponents": list(ye), "coeff": f"{c.numerator}/{c.denominator}"}
            for (ue, ye), c in sorted(eq.P.items())
        ],
        "shifts": [[list(r) for r in s.rows] for s in eq.shifts],
    }
    if eq.name:
        doc["name"] = eq.name
    if eq.description:
        doc["description"] = eq.description
    return doc


def load_equation(path) -> QFunctionalEquation:
    with open(Path(path), encoding="utf-8") as fh:
        return equation_from_dict(json.load(fh))
