import math
from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import given, strategies as st

from excursion.amplitudes import excursion_moments, limit_moments, RecursionParams
from excursion.critical import (
    AssumptionViolation,
    UnsupportedDirection,
    aperiodicity_check,
    coefficient_asymptotic,
    critical_data,
    find_critical,
    model_limit_moments,
    printed_scaling_constants,
    q_eval,
    require_assumption,
    scaling_constants,
    shift_constants,
    specialize,
)
from excursion.exact import HalfInt, Surd
from excursion.models import binary, dyck, motzkin
from excursion.qfe import (
    MonomialQShift,
    QFunctionalEquation,
    SparsePolynomial,
    normalized_moment_sequence,
    solve_jets,
)


def _model(M, N, terms, shifts):
    return QFunctionalEquation(M, N, SparsePolynomial(M, N, terms), shifts)


def test_specialize_examples():
    assert specialize(dyck(2)) == {(1, 0): 1, (1, 1): 2, (1, 2): 1}
    eq = _model(1, 1, {((1, 0), (1,)): 1}, (MonomialQShift.identity(1),))
    assert specialize(eq) == {(1, 1): 1}
    eq = _model(1, 2, {((1, 0), (1, 1)): 1}, (MonomialQShift.identity(1),) * 2)
    assert specialize(eq) == {(1, 2): 1}


@pytest.mark.parametrize(
    "Q,expected",
    [
        ({(1, 0): 1, (1, 1): 2, (1, 2): 1}, (F(1, 4), 1, F(1, 4), 4, -4)),
        ({(1, 0): 1, (1, 1): 1, (1, 2): 1}, (F(1, 3), 1, F(1, 3), 3, -3)),
        ({(1, 0): 1, (1, 2): 1}, (F(1, 2), 1, F(1, 2), 2, -2)),
    ],
)
def test_find_critical_rational_models(Q, expected):
    c = find_critical({k: F(v) for k, v in Q.items()})
    assert c.exact
    assert (c.u_c, c.y_c, c.B, c.C, c.f0) == expected
    assert c.f0**2 == c.C / c.B
    assert q_eval(Q, c.u_c, c.y_c) == c.y_c
    assert q_eval(Q, c.u_c, c.y_c, dy=1) == 1


def test_motzkin_radius_by_ratio_test():
    seq = solve_jets(motzkin(1), 400, 0).counting_sequence()
    ratio = seq[-2] / seq[-1]
    assert abs(ratio - 1 / 3) < 2e-3


cubic_terms = st.dictionaries(
    st.sampled_from([(1, 1), (1, 2), (1, 3), (2, 0), (2, 2), (1, 4)]),
    st.fractions(min_value=F(1, 7), max_value=3, max_denominator=7),
    min_size=1,
)


@given(st.fractions(min_value=F(1, 5), max_value=3, max_denominator=5), cubic_terms)
def test_critical_residuals(c0, extra):
    Q = {(1, 0): c0, **extra}
    if max(b for _, b in Q) < 2:
        Q[(1, 2)] = F(1)
    c = find_critical(Q)
    with mpmath.workdps(50):
        r1 = abs(q_eval(Q, c.u_c, c.y_c) - c.y_c)
        r2 = abs(q_eval(Q, c.u_c, c.y_c, dy=1) - 1)
        assert r1 < 1e-28 and r2 < 1e-28
        if c.exact:
            assert r1 == 0 and r2 == 0
        assert c.u_c > 0 and c.y_c > 0 and c.B > 0 and c.C > 0 and c.f0 < 0
        if isinstance(c.f0, F):
            assert c.f0**2 == c.C / c.B
        else:
            assert abs(c.f0**2 - mpmath.mpf(str(c.C)) / mpmath.mpf(str(c.B))) < 1e-25
        if c.y_interval is not None:
            lo, hi = c.y_interval
            assert hi - lo <= mpmath.mpf("1e-30") and lo <= c.y_c <= hi


def test_find_critical_irrational_root():
    Q = {(1, 0): F(1), (1, 1): F(1), (1, 2): F(1), (2, 3): F(1)}
    c = find_critical(Q)
    assert not c.exact
    with mpmath.workdps(50):
        assert abs(q_eval(Q, c.u_c, c.y_c) - c.y_c) < 1e-28


def test_find_critical_rejects_bad_Q():
    with pytest.raises(AssumptionViolation):
        find_critical({(1, 1): F(1)})
    with pytest.raises(AssumptionViolation):
        find_critical({(1, 2): F(1)})
    with pytest.raises(AssumptionViolation):
        find_critical({(1, 0): F(1), (1, 2): F(-1)})


def test_dyck_shift_constants():
    for M in (1, 2, 4):
        d = critical_data(dyck(M))
        assert d.A[0] == F(1, 4) and d.mu[0] == F(1, 8)
        assert d.mu[1:] == tuple(F(i + 1, 4) for i in range(1, M))
        assert d.A[1:] == tuple(F(i + 1, 2) for i in range(1, M))


def test_identity_shifts_give_zero_constants():
    ident = MonomialQShift.identity(2)
    eq = _model(2, 2, {((1, 1, 1), (0, 0)): 1, ((1, 1, 1), (1, 1)): 1, ((1, 1, 1), (1, 0)): 1, ((1, 1, 1), (0, 1)): 1},
                (ident, ident))
    crit = find_critical(specialize(eq))
    A, mu = shift_constants(eq, crit)
    assert A == (0, 0) and mu == (0, 0)
    with pytest.raises(UnsupportedDirection):
        scaling_constants(mu)
    with pytest.raises(UnsupportedDirection):
        model_limit_moments(eq, (1, 0))


def test_sum_of_y_derivatives_is_one():
    from excursion.critical import _dP_dy

    for eq in (dyck(2), motzkin(2), binary(1)):
        c = find_critical(specialize(eq))
        assert sum(_dP_dy(eq, j, c.u_c, c.y_c) for j in range(eq.N)) == 1


def test_scaling_constants_dyck_and_halved():
    for M in (1, 3, 5):
        mu = critical_data(dyck(M), check_aperiodic=False).mu
        c, d = scaling_constants(mu)
        assert d == [1] * M
        assert c == [Surd.rational_power(2, k + 2) for k in range(1, M + 1)]
    c, _ = scaling_constants((F(1, 8),), 1)
    assert c[0] == Surd.rational_power(2, 3)

    mu = (F(1, 16), F(1, 2))
    c, d = scaling_constants(mu)
    assert d[0] == 2 and c[0] == Surd.rational_power(2, 3) / 2
    # halving mu_0 halves the first limit moment (scaling covariance)
    full = limit_moments(RecursionParams((F(1, 8), F(1, 2)), -4), F(1, 4), (1, 0))
    half = limit_moments(RecursionParams(mu, -4), F(1, 4), (1, 0))
    assert half[(1, 0)] == full[(1, 0)] / 2


def test_scaling_constants_closed_form():
    mu = (F(1, 6), F(1), F(2, 7))
    c, _ = scaling_constants(mu)
    for k in (1, 2, 3):
        want = Surd.rational_power(2, k + 2) * (2 * 4**k * math.prod(mu[:k]) / F(math.factorial(k)))
        assert c[k - 1] == want
    printed = printed_scaling_constants(mu)
    assert printed[0] == Surd.rational_power(2, 3) * (2 * mu[0] / 4)


def test_printed_formula_on_dyck_values():
    mu = critical_data(dyck(3), check_aperiodic=False).mu
    printed = printed_scaling_constants(mu)
    assert printed == [Surd.rational_power(2, k + 2) / 16**k for k in (1, 2, 3)]


def test_aperiodicity():
    assert aperiodicity_check([1, 2, 5, 14]) is True
    assert aperiodicity_check([0, 3, 0, 5, 0, 7, 0, 9]) is False
    assert aperiodicity_check([1, 0, 0, 4]) is None
    assert aperiodicity_check([]) is None


def test_periodic_model_is_rejected():
    d = critical_data(binary(1))
    assert (d.u_c, d.y_c, d.B, d.C, d.f0) == (F(1, 2), 1, F(1, 2), 2, -2)
    assert d.aperiodic is False
    with pytest.raises(AssumptionViolation):
        require_assumption(d)


def test_coefficient_asymptotic_catalan():
    d = critical_data(dyck(1), check_aperiodic=False)
    g0 = HalfInt(-1)
    # C_n = 4^n n^(-3/2) pi^(-1/2) (1 - 9/(8n) + O(n^-2))
    for n in (20, 200, 10**4):
        cat = math.comb(2 * n, n) // (n + 1)
        ratio = coefficient_asymptotic(d, g0, d.f0, n) / cat
        assert abs(ratio * (1 - F(9, 8 * n)) - 1) < 2.0 / n**2
    n = 10**4
    assert abs(coefficient_asymptotic(d, g0, d.f0, n) / (math.comb(2 * n, n) // (n + 1)) - 1) < 0.02


def test_coefficient_asymptotic_gamma_one():
    d = critical_data(dyck(1), check_aperiodic=False)
    n = 37
    val = coefficient_asymptotic(d, HalfInt(2), F(1, 4), n)
    assert val == pytest.approx(float(F(1, 4) * 4 ** (n + 1)), rel=1e-25)
    assert coefficient_asymptotic(d, HalfInt(0), 1, n) == 0
    with pytest.raises(ValueError):
        coefficient_asymptotic(d, HalfInt(2), 1, 0)


def test_motzkin_limit_moments_match_finite_size_trend():
    lim = model_limit_moments(motzkin(1), (2,))
    assert lim[(1,)] == Surd(F(1, 2), 1, 3)
    sol = solve_jets(motzkin(1), 300, 2)
    for k in ((1,), (2,)):
        _, rep = normalized_moment_sequence(sol, k, [75, 150, 300])
        assert rep["limit"] == pytest.approx(float(lim[k]), rel=1e-14)
        assert rep["shrinking"]
        assert abs(rep["relative_deviations"][-1]) < 0.2


def test_dyck_model_limit_moments_equal_closed_form():
    m = model_limit_moments(dyck(2), max_gamma=8)
    ex = excursion_moments(2, max_gamma=8)
    for k, v in ex.items():
        assert m[k] == v * Surd.rational_power(2, 3 * k[0]) * Surd.rational_power(2, 4 * k[1])
