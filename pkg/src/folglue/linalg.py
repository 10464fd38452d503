"""Exact linear algebra over the rationals and prime fields.

Three engines, chosen by caller:

  * solve_affine: Gauss-Jordan over any exact field, returning a
    particular solution plus a kernel basis.  Object arithmetic, used on
    the modest systems the order-by-order solver produces.
  * bareiss_rank: fraction-free elimination over the integers, for
    certified ranks of rational matrices after clearing denominators.
    Intermediate entries stay integral (each division is exact), which is
    the standard way to dodge coefficient blowup without floats.
  * rank_mod_p: vectorized elimination on int64 arrays.  Primes are
    capped at 31 bits elsewhere, so pivot * row products fit comfortably.

A rank mod p never exceeds the rational rank (reduction can only collapse
pivots), so agreement of several primes with a claimed value certifies a
lower bound; the certificate machinery leans on that direction only.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm

import numpy as np

from .rings import Ring


def solve_affine(
    rows: list[list], rhs: list, ring: Ring, ncols: int | None = None
) -> tuple[list, list[list]] | None:
    """Solve A x = b over an exact field.

    Returns (particular, kernel_basis) with kernel vectors spanning the
    solution space of A x = 0, or None when the system is inconsistent.
    Input rows are not mutated.  ncols is required when rows is empty (a
    constraint-free system still needs to know its unknown count).
    """
    m = len(rows)
    if m:
        n = len(rows[0])
        if ncols is not None and ncols != n:
            raise ValueError(f"rows have {n} columns, caller says {ncols}")
    elif ncols is None:
        raise ValueError("empty system needs an explicit column count")
    else:
        n = ncols
    if m != len(rhs):
        raise ValueError(f"{m} rows but {len(rhs)} right-hand sides")
    a = [list(r) + [rhs[i]] for i, r in enumerate(rows)]
    for r in a:
        if len(r) != n + 1:
            raise ValueError("ragged matrix")
    zero, one = ring.zero(), ring.one()
    pivots: list[int] = []
    row = 0
    for col in range(n):
        pivot_row = None
        for r in range(row, m):
            if a[r][col]:
                pivot_row = r
                break
        if pivot_row is None:
            continue
        a[row], a[pivot_row] = a[pivot_row], a[row]
        inv = one / a[row][col]
        a[row] = [v * inv for v in a[row]]
        for r in range(m):
            if r != row and a[r][col]:
                f = a[r][col]
                a[r] = [a[r][i] - f * a[row][i] for i in range(n + 1)]
        pivots.append(col)
        row += 1
        if row == m:
            break
    for r in range(row, m):
        if a[r][n]:
            return None
    particular = [zero] * n
    for r, col in enumerate(pivots):
        particular[col] = a[r][n]
    free = [c for c in range(n) if c not in set(pivots)]
    kernel = []
    for fc in free:
        vec = [zero] * n
        vec[fc] = one
        for r, col in enumerate(pivots):
            vec[col] = -a[r][fc]
        kernel.append(vec)
    return particular, kernel


def clear_denominators(rows: list[list[Fraction]]) -> list[list[int]]:
    """Scale each row by the lcm of its denominators (rank-preserving)."""
    out = []
    for r in rows:
        scale = lcm(*(c.denominator for c in r)) if r else 1
        out.append([int(c * scale) for c in r])
    return out


def bareiss_rank(rows: list[list[int]]) -> int:
    """Rank of an integer matrix by fraction-free elimination."""
    a = [list(r) for r in rows]
    m = len(a)
    if m == 0:
        return 0
    n = len(a[0])
    rank = 0
    prev = 1
    row = 0
    for col in range(n):
        pivot_row = None
        for r in range(row, m):
            if a[r][col]:
                pivot_row = r
                break
        if pivot_row is None:
            continue
        a[row], a[pivot_row] = a[pivot_row], a[row]
        p = a[row][col]
        for r in range(row + 1, m):
            f = a[r][col]
            # the scale-then-divide runs even when f is zero; the exact
            # division by the previous pivot is what keeps entries integral
            for c in range(col + 1, n):
                a[r][c] = (a[r][c] * p - f * a[row][c]) // prev
            a[r][col] = 0
        prev = p
        rank += 1
        row += 1
        if row == m:
            break
    return rank


def rank_exact_qq(rows: list[list[Fraction]]) -> int:
    if not rows or not rows[0]:
        return 0
    return bareiss_rank(clear_denominators(rows))


def rank_mod_p(matrix: np.ndarray | list[list[int]], p: int) -> int:
    """Rank over the prime field, vectorized elimination on int64."""
    a = np.array(matrix, dtype=np.int64) % p
    m, n = a.shape if a.ndim == 2 else (0, 0)
    if m == 0 or n == 0:
        return 0
    rank = 0
    row = 0
    for col in range(n):
        nz = np.nonzero(a[row:, col])[0]
        if nz.size == 0:
            continue
        pr = row + int(nz[0])
        if pr != row:
            a[[row, pr]] = a[[pr, row]]
        inv = pow(int(a[row, col]), -1, p)
        a[row] = (a[row] * inv) % p
        below = a[row + 1 :, col]
        mask = below != 0
        if mask.any():
            a[row + 1 :][mask] = (
                a[row + 1 :][mask] - below[mask, None] * a[row][None, :]
            ) % p
        rank += 1
        row += 1
        if row == m:
            break
    return rank


def fractions_mod_p(rows: list[list[Fraction]], p: int) -> np.ndarray | None:
    """Reduce a rational matrix mod p, or None when a denominator dies."""
    m = len(rows)
    n = len(rows[0]) if m else 0
    out = np.zeros((m, n), dtype=np.int64)
    for i, r in enumerate(rows):
        for j, c in enumerate(r):
            if c.denominator % p == 0:
                return None
            out[i, j] = c.numerator * pow(c.denominator, -1, p) % p
    return out
