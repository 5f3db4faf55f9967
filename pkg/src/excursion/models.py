"""Built-in q-functional equations, selectable by name."""

from __future__ import annotations

from math import comb

from .qfe import MonomialQShift, QFunctionalEquation, SparsePolynomial


def _power_rows(M: int, first_row: tuple) -> tuple:
    # v_k = prod_{l >= k} u_l^{C(l, k)}: shifting a height h to h + 1 in every power
    rows = [first_row]
    for k in range(1, M + 1):
        rows.append(tuple(0 if l < k else comb(l, k) for l in range(M + 1)))
    return tuple(rows)


def dyck(M: int = 1) -> QFunctionalEquation:
    """Non-empty Dyck paths by half-length and k-th moments of height, k = 1..M.

    E(u) = u_0 u_1 ... u_M (E(u) + 1)(E(v(u)) + 1), v_0 = u_0 u_1^2 ... u_M^2.
    """
    ones = (1,) * (M + 1)
    P = SparsePolynomial(M, 2, {(ones, ye): 1 for ye in [(0, 0), (1, 0), (0, 1), (1, 1)]})
    v = MonomialQShift(_power_rows(M, (1,) + (2,) * M))
    return QFunctionalEquation(
        M, 2, P, (MonomialQShift.identity(M), v), name="dyck",
        description="Dyck paths by length and sums of k-th powers of heights",
    )


def _tree_shift(M: int) -> MonomialQShift:
    return MonomialQShift(_power_rows(M, (1,) + (1,) * M))


def motzkin(M: int = 1) -> QFunctionalEquation:
    """Unary-binary plane trees by nodes and sums of k-th powers of node depths."""
    u0 = (1,) + (0,) * M
    P = SparsePolynomial(M, 1, {(u0, (0,)): 1, (u0, (1,)): 1, (u0, (2,)): 1})
    return QFunctionalEquation(
        M, 1, P, (_tree_shift(M),), name="motzkin",
        description="unary-binary trees by nodes and sums of k-th powers of depths",
    )


def binary(M: int = 1) -> QFunctionalEquation:
    """Complete binary trees by nodes and sums of k-th powers of node depths.

    Sizes are odd only, so the counting series is periodic.
    """
    u0 = (1,) + (0,) * M
    P = SparsePolynomial(M, 1, {(u0, (0,)): 1, (u0, (2,)): 1})
    return QFunctionalEquation(
        M, 1, P, (_tree_shift(M),), name="binary",
        description="complete binary trees by nodes and sums of k-th powers of depths",
    )


BUILTIN = {"dyck": dyck, "motzkin": motzkin, "binary": binary}


def builtin(name: str, M: int = 1) -> QFunctionalEquation:
    try:
        factory = BUILTIN[name]
    except KeyError:
        raise KeyError(f"unknown built-in model {name!r}; choose from {sorted(BUILTIN)}") from None
    return factory(M)
