import math
from fractions import Fraction as F

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from excursion.models import dyck
from excursion.oracle import (
    PathSample,
    dyck_jets,
    dyck_polynomials,
    exact_mean_area,
    mc_moments,
    sample_dyck_uniform,
    sample_paths,
)
from excursion.qfe import solve_jets

from conftest import dyck_paths, height_sums


def test_dp_examples():
    j = dyck_jets(3, 1, 1)
    assert j[(0,)] == 5
    assert j[(1,)] == -29
    assert dyck_jets(0, 2, 3).coeffs == {(0, 0): 1}


def test_polynomial_examples():
    assert dyck_polynomials(3, 1) == {(9,): 1, (7,): 1, (5,): 2, (3,): 1}
    assert dyck_polynomials(2, 1) == {(4,): 1, (2,): 1}
    assert dyck_polynomials(1, 2) == {(1, 1): 1}
    with pytest.raises(ValueError):
        dyck_polynomials(17, 1)


@pytest.mark.parametrize("n", range(1, 8))
def test_polynomials_match_enumeration(n):
    brute = {}
    for p in dyck_paths(n):
        e = height_sums(p, 2)
        brute[e] = brute.get(e, 0) + 1
    assert dyck_polynomials(n, 2) == brute


def test_polynomial_value_and_derivative_at_one():
    for n in range(1, 11):
        poly = dyck_polynomials(n, 1)
        assert sum(poly.values()) == math.comb(2 * n, n) // (n + 1)
        assert sum(e[0] * c for e, c in poly.items()) == -dyck_jets(n, 1, 1)[(1,)]


def test_dp_equals_solver():
    for M in (1, 2, 3):
        for K in range(5):
            sol = solve_jets(dyck(M), 12, K)
            for n in range(1, 13):
                assert dyck_jets(n, M, K) == sol.jet(n)


def test_sampler_single_path():
    for seed in range(20):
        assert sample_dyck_uniform(1, seed).steps == (1, -1)
    with pytest.raises(ValueError):
        sample_dyck_uniform(0, 1)


def test_sampler_deterministic():
    assert sample_dyck_uniform(30, 123) == sample_dyck_uniform(30, 123)
    assert np.array_equal(sample_paths(5, 100, 9), sample_paths(5, 100, 9))


@given(st.integers(1, 40), st.integers(0, 2**64 - 1))
def test_sampled_paths_are_dyck_paths(n, seed):
    p = sample_dyck_uniform(n, seed)
    assert len(p.steps) == 2 * n
    heights = p.heights
    assert min(heights) == 0 and heights[-1] == 0


def test_path_sample_validation():
    with pytest.raises(ValueError):
        PathSample((-1, 1))
    with pytest.raises(ValueError):
        PathSample((1, 1))


def test_uudd_frequency():
    paths = sample_paths(2, 10**5, 2024)
    freq = np.mean(np.all(paths == np.array([1, 1, -1, -1]), axis=1))
    assert 0.495 <= freq <= 0.505


def _chi_square(n, samples, seed):
    paths = sample_paths(n, samples, seed)
    codes = ((paths + 1) // 2).astype(np.int64) @ (1 << np.arange(2 * n, dtype=np.int64))
    every = [sum(((s + 1) // 2) << i for i, s in enumerate(p)) for p in dyck_paths(n)]
    counts = np.array([np.sum(codes == c) for c in every])
    assert counts.sum() == samples
    expected = samples / len(every)
    stat = float(((counts - expected) ** 2 / expected).sum())
    dof = len(every) - 1
    # upper tail of the chi-square distribution
    p = float(mpmath.gammainc(dof / 2, stat / 2, mpmath.inf, regularized=True))
    return counts, p


def test_five_paths_within_three_sigma():
    counts, _ = _chi_square(3, 10**5, 77)
    sigma = math.sqrt(10**5 * 0.2 * 0.8)
    assert np.all(np.abs(counts - 2 * 10**4) < 3 * sigma)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_sampler_chi_square(n):
    _, p = _chi_square(n, 10**6, 1000 + n)
    assert p > 0.001


def test_reversal_symmetry_of_height_sums():
    paths = sample_paths(25, 200, 5)
    for p in paths:
        rev = tuple(-int(s) for s in p[::-1])
        assert height_sums(rev, 3) == height_sums(tuple(int(s) for s in p), 3)
        PathSample(rev)


def test_mc_degenerate_and_thread_independence():
    r = mc_moments(1, 1000, 2, seed=3)
    assert r.mean == (1.0, 1.0) and r.stderr == (0.0, 0.0)
    a = mc_moments(40, 20000, 2, seed=11, threads=1)
    b = mc_moments(40, 20000, 2, seed=11, threads=4)
    assert a == b


def test_mc_estimate_against_exact_small_n():
    n = 30
    exact = exact_mean_area(n)
    r = mc_moments(n, 40000, 1, seed=8)
    assert abs(r.mean[0] - exact) < 4 * r.stderr[0]


def test_exact_mean_area_small():
    # mean area at n = 3 is 29/5, normalised by 3^(3/2)
    assert exact_mean_area(3) == pytest.approx(float(F(29, 5)) / 3**1.5, rel=1e-15)
