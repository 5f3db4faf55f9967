"""Self-check suite behind ``excursion verify``."""

from __future__ import annotations

import math
import time
from fractions import Fraction as F

from .amplitudes import dyck_params, excursion_moments, pde_residual, amplitudes_to_degree
from .critical import critical_data, scaling_constants
from .exact import Surd
from .models import dyck, motzkin
from .qfe import normalized_moment_sequence, solve_jets

R2PI = Surd(1, 1, 2)  # sqrt(2 pi)

GOLDEN = {
    1: [1, F(1, 4) * R2PI, F(5, 12), F(15, 128) * R2PI, F(221, 1008), F(565, 8192) * R2PI],
    2: [1, F(1, 2), F(19, 60), F(631, 2520), F(1219, 5040), F(92723, 332640), F(1513891, 4036032)],
    3: [1, F(3, 16) * R2PI, F(207, 560), F(11907, 65536) * R2PI, F(88655283, 108908800),
        F(1165359069, 1476395008) * R2PI],
}
# E[X_4^k] / k!, k = 0..5
GOLDEN_X4_OVER_FACTORIAL = [1, F(1, 2), F(251, 840), F(288751, 1201200), F(19093793, 76236160),
                            F(1051696404203, 3259095840000)]


def _pure_moments(M: int, top: int) -> list:
    e = tuple(top if i == M - 1 else 0 for i in range(M))
    table = excursion_moments(M, e)
    return [table[tuple(k if i == M - 1 else 0 for i in range(M))] for k in range(top + 1)]


def check_golden(M: int):
    want = GOLDEN[M]
    got = _pure_moments(M, len(want) - 1)
    bad = [k for k, (a, b) in enumerate(zip(got, want)) if a != Surd.coerce(b)]
    return not bad, f"k=0..{len(want) - 1}" + (f" mismatch at {bad}" if bad else "")


def check_x4():
    got = _pure_moments(4, 5)
    bad = [k for k, (a, b) in enumerate(zip(got, GOLDEN_X4_OVER_FACTORIAL)) if a / math.factorial(k) != Surd.coerce(b)]
    return not bad, "E[X_4^k]/k!, k=0..5" + (f" mismatch at {bad}" if bad else "")


def check_dyck_critical(M: int = 4):
    d = critical_data(dyck(M))
    c, _ = scaling_constants(d.mu)
    ok = (d.u_c, d.y_c, d.B, d.C, d.f0) == (F(1, 4), 1, F(1, 4), 4, -4)
    ok &= d.mu == tuple([F(1, 8)] + [F(i + 1, 4) for i in range(1, M)])
    ok &= all(c[k - 1] == Surd.rational_power(2, k + 2) for k in range(1, M + 1))
    return ok, f"M={M}: u_c={d.u_c} f0={d.f0} mu={[str(m) for m in d.mu]}"


def check_oracle(n_max: int = 12):
    from .oracle import dyck_jets

    for M in (1, 2, 3):
        for K in range(5):
            sol = solve_jets(dyck(M), n_max, K)
            for n in range(1, n_max + 1):
                if sol.jet(n) != dyck_jets(n, M, K):
                    return False, f"differs at n={n} M={M} K={K}"
    return True, f"n=1..{n_max}, M<=3, K<=4"


def check_catalan(n_max: int = 20):
    seq = solve_jets(dyck(1), n_max, 0).counting_sequence()
    want = [math.comb(2 * n, n) // (n + 1) for n in range(1, n_max + 1)]
    return seq == want, f"n=1..{n_max}"


def check_convergence():
    sol = solve_jets(dyck(1), 400, 1)
    _, rep = normalized_moment_sequence(sol, (1,), [100, 400], limit=math.sqrt(math.pi))
    r100, r400 = rep["relative_deviations"]
    ok = abs(r400) < 0.06 and abs(r400) < abs(r100)
    return ok, f"m1/sqrt(pi)-1: n=100 {r100:+.4f}, n=400 {r400:+.4f}"


def check_motzkin_trend():
    sol = solve_jets(motzkin(1), 200, 1)
    _, rep = normalized_moment_sequence(sol, (1,), [50, 100, 200])
    return bool(rep["shrinking"]), f"limit {rep['limit']:.6f}, deviations {[round(d, 4) for d in rep['deviations']]}"


def check_pde(order: int = 8):
    params = dyck_params(3)
    res = pde_residual(params, amplitudes_to_degree(params, order), order)
    return not res, f"Dyck M=3 through degree {order}"


QUICK = [
    ("excursion moments X_1", lambda: check_golden(1)),
    ("excursion moments X_2", lambda: check_golden(2)),
    ("excursion moments X_3", lambda: check_golden(3)),
    ("excursion moments X_4", check_x4),
    ("Dyck critical constants", check_dyck_critical),
]
FULL = QUICK + [
    ("solver = dynamic program", check_oracle),
    ("Catalan counting row", check_catalan),
    ("Dyck finite-size convergence", check_convergence),
    ("Motzkin finite-size convergence", check_motzkin_trend),
    ("dominant-balance residual", check_pde),
]


def run_checks(level: str) -> list[tuple[str, bool, str]]:
    suites = {"quick": QUICK, "full": FULL}
    if level not in suites:
        raise ValueError(f"unknown level {level!r}")
    out = []
    for name, fn in suites[level]:
        t = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as e:  # a crashing check is a failing check
            ok, detail = False, f"{type(e).__name__}: {e}"
        out.append((name, bool(ok), f"{detail} ({time.perf_counter() - t:.2f}s)"))
    return out
