"""Independent ground truth for the Dyck model.

Forward dynamic programming over (position, height), an exactly uniform
sequential sampler, and Monte Carlo estimates of the normalised height
moments.  Nothing here goes through the functional-equation solver.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import comb

import numpy as np

from .exact import indices_of_degree_at_most
from .jets import Jet

POLY_CAP = 16
CHUNK = 8192


def _height_factor(heights: np.ndarray, index: tuple) -> np.ndarray:
    """Coefficient of delta^index in prod_k (1 - delta_k)^(h^k), for each height h."""
    out = np.ones(len(heights), dtype=object)
    for k, j in enumerate(index, start=1):
        if j:
            sign = -1 if j % 2 else 1
            out = out * np.array([sign * comb(int(h) ** k, j) for h in heights], dtype=object)
    return out


def dyck_jets(n: int, M: int, K: int) -> Jet:
    """Sum over Dyck paths of length 2n of prod_k (1 - delta_k)^(x_k), to order K."""
    if n < 0:
        raise ValueError("n must be >= 0")
    idx = list(indices_of_degree_at_most(M, K))
    pos = {k: i for i, k in enumerate(idx)}
    # products idx[a] + idx[b] that stay inside the truncation
    pairs = []
    for a, ka in enumerate(idx):
        for b, kb in enumerate(idx):
            s = tuple(x + y for x, y in zip(ka, kb))
            if s in pos:
                pairs.append((pos[s], a, b))
    H = n + 1
    heights = np.arange(H + 1)
    factor = np.empty((H + 1, len(idx)), dtype=object)
    for b, kb in enumerate(idx):
        factor[:, b] = _height_factor(heights, kb)
    trivial = K == 0 or M == 0

    state = np.zeros((H + 1, len(idx)), dtype=object)
    state[0, 0] = 1
    for i in range(1, 2 * n + 1):
        top = min(i, 2 * n - i)
        new = np.zeros_like(state)
        new[1 : top + 1] = state[0:top]
        new[0 : top + 1] += state[1 : top + 2]
        if not trivial:
            lo = 0
            prod = np.zeros_like(new[: top + 1])
            for t, a, b in pairs:
                prod[:, t] += new[lo : top + 1, a] * factor[lo : top + 1, b]
            new[: top + 1] = prod
        state = new
    return Jet(M, K, {k: int(state[0, i]) for i, k in enumerate(idx)})


def dyck_polynomials(n: int, M: int) -> dict:
    """Joint polynomial sum_p q_1^{x_1(p)} ... q_M^{x_M(p)} as {exponent tuple: count}."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n > POLY_CAP:
        raise ValueError(f"n = {n} exceeds the full-polynomial cap {POLY_CAP}")
    rows = [dict() for _ in range(n + 2)]
    rows[0][(0,) * M] = 1
    for i in range(1, 2 * n + 1):
        top = min(i, 2 * n - i)
        new = [dict() for _ in range(n + 2)]
        for h in range(top + 1):
            w = tuple(h**k for k in range(1, M + 1))
            for src in (h - 1, h + 1):
                if 0 <= src <= n:
                    for e, c in rows[src].items():
                        key = tuple(a + b for a, b in zip(e, w))
                        new[h][key] = new[h].get(key, 0) + c
        rows = new
    return dict(rows[0])


@dataclass(frozen=True)
class PathSample:
    steps: tuple

    def __post_init__(self):
        h = 0
        for s in self.steps:
            if s not in (1, -1):
                raise ValueError("steps must be +1 or -1")
            h += s
            if h < 0:
                raise ValueError("path goes below zero")
        if h != 0:
            raise ValueError("path does not return to zero")

    @property
    def heights(self) -> tuple:
        out, h = [0], 0
        for s in self.steps:
            h += s
            out.append(h)
        return tuple(out)

    def height_moments(self, M: int) -> tuple:
        hs = self.heights
        return tuple(sum(h**k for h in hs) for k in range(1, M + 1))


def _walk(rng: np.random.Generator, n: int, size: int, M: int, record: bool):
    """Advance `size` independent uniform Dyck paths; return height power sums (and steps)."""
    h = np.zeros(size, dtype=np.int64)
    sums = np.zeros((M, size), dtype=np.float64)
    steps = np.empty((size, 2 * n), dtype=np.int8) if record else None
    for i in range(2 * n):
        L = 2 * n - i
        # P(up) = ballot(L-1, h+1) / ballot(L, h) = (h+2)(L-h) / (2L(h+1)), drawn exactly
        r = rng.integers(0, 2 * L * (h + 1))
        up = r < (h + 2) * (L - h)
        h = h + np.where(up, 1, -1)
        if record:
            steps[:, i] = np.where(up, 1, -1)
        hf = h.astype(np.float64)
        p = hf.copy()
        for k in range(M):
            sums[k] += p
            if k + 1 < M:
                p *= hf
    return sums, steps


def sample_dyck_uniform(n: int, seed: int) -> PathSample:
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    _, steps = _walk(rng, n, 1, 1, record=True)
    return PathSample(tuple(int(s) for s in steps[0]))


def sample_paths(n: int, count: int, seed: int) -> np.ndarray:
    """`count` uniform Dyck paths as a (count, 2n) array of +1/-1 steps."""
    if n < 1 or count < 1:
        raise ValueError("n and count must be >= 1")
    children = np.random.SeedSequence(seed).spawn(-(-count // CHUNK))
    parts = []
    for c, ss in enumerate(children):
        size = min(CHUNK, count - c * CHUNK)
        parts.append(_walk(np.random.default_rng(ss), n, size, 1, record=True)[1])
    return np.concatenate(parts)


def worker_count() -> int:
    env = os.environ.get("EXC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"EXC_THREADS must be an integer, got {env!r}") from None
    return max(1, min(8, os.cpu_count() or 1))


@dataclass
class MCResult:
    n: int
    samples: int
    seed: int
    mean: tuple
    stderr: tuple


def mc_moments(n: int, samples: int, M: int = 1, seed: int = 0, threads: int | None = None) -> MCResult:
    """Mean and standard error of X_{k,n} = x_{k,n} / n^((k+2)/2), k = 1..M.

    Samples are split into fixed chunks, each with its own spawned seed, so the
    result does not depend on the number of worker threads.
    """
    if n < 1 or samples < 1:
        raise ValueError("n and samples must be >= 1")
    if M < 1:
        raise ValueError("M must be >= 1")
    nchunks = -(-samples // CHUNK)
    children = np.random.SeedSequence(seed).spawn(nchunks)
    scale = np.array([float(n) ** ((k + 2) / 2) for k in range(1, M + 1)])

    def run(c):
        size = min(CHUNK, samples - c * CHUNK)
        sums, _ = _walk(np.random.default_rng(children[c]), n, size, M, record=False)
        X = sums / scale[:, None]
        return size, X.mean(axis=1), ((X - X.mean(axis=1, keepdims=True)) ** 2).sum(axis=1)

    threads = threads or worker_count()
    if threads > 1 and nchunks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, range(nchunks)))
    else:
        parts = [run(c) for c in range(nchunks)]

    # Chan et al. merge of chunk means and sums of squared deviations, in chunk order
    count, mean, m2 = 0, np.zeros(M), np.zeros(M)
    for size, mu, s2 in parts:
        tot = count + size
        d = mu - mean
        mean = mean + d * size / tot
        m2 = m2 + s2 + d**2 * count * size / tot
        count = tot
    if samples > 1:
        se = np.sqrt(m2 / (samples - 1) / samples)
    else:
        se = np.zeros(M)
    return MCResult(n, samples, seed, tuple(float(x) for x in mean), tuple(float(x) for x in se))


def exact_mean_area(n: int, M: int = 1, k: int = 1) -> float:
    """Exact E[X_{k,n}] from the dynamic program (k-th linear jet coefficient)."""
    from fractions import Fraction

    jet = dyck_jets(n, M, 1)
    e = tuple(1 if i == k - 1 else 0 for i in range(M))
    total = -jet[e]
    return float(Fraction(total, jet[(0,) * M])) / float(n) ** ((k + 2) / 2)
