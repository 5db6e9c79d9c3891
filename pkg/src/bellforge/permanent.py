"""Matrix permanents and bosonic transition amplitudes."""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Sequence

import numpy as np

NAIVE_MAX_N = 8


def _as_square(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"permanent needs a square matrix, got shape {a.shape}")
    return a


def permanent_ryser(a) -> complex:
    """Ryser's formula with Gray-code subset order, O(2^n n).

    Consecutive subsets differ by one column, so the row sums are updated
    incrementally instead of being recomputed.
    """
    a = _as_square(a)
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0j
    row_sums = np.zeros(n, dtype=complex)
    total = 0j
    sign = 1.0  # (-1)^{|S|}; each Gray-code step changes |S| by one
    gray = 0
    for k in range(1, 1 << n):
        j = (k & -k).bit_length() - 1
        gray ^= 1 << j
        if gray >> j & 1:
            row_sums += a[:, j]
        else:
            row_sums -= a[:, j]
        sign = -sign
        total += sign * np.prod(row_sums)
    # perm = (-1)^n sum_S (-1)^{|S|} prod_i rowsum_i(S)
    return complex(-total if n % 2 else total)


def permanent_naive(a) -> complex:
    """Sum over all n! permutations.  Test oracle; refuses n > 8."""
    a = _as_square(a)
    n = a.shape[0]
    if n > NAIVE_MAX_N:
        raise ValueError(f"naive permanent limited to n <= {NAIVE_MAX_N}, got {n}")
    rows = np.arange(n)
    return complex(sum(np.prod(a[rows, perm]) for perm in itertools.permutations(range(n))))


@lru_cache(maxsize=None)
def _ryser_tables(n: int) -> tuple[np.ndarray, np.ndarray]:
    subsets = np.array(
        [[(k >> j) & 1 for j in range(n)] for k in range(1, 1 << n)], dtype=float
    )
    signs = (-1.0) ** (n - subsets.sum(axis=1))
    return subsets.T.astype(complex), signs


def batch_permanent(a: np.ndarray) -> np.ndarray:
    """Permanents of a stack of square matrices, shape ``(..., n, n)``.

    Plain (non Gray-code) Ryser, vectorized across the stack; used on the
    optimizer's hot path where n <= 4.
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[-1]
    if a.shape[-2] != n:
        raise ValueError(f"square matrices expected, got trailing shape {a.shape[-2:]}")
    if n == 0:
        return np.ones(a.shape[:-2], dtype=complex)
    if n == 1:
        return a[..., 0, 0].copy()
    if n == 2:
        return a[..., 0, 0] * a[..., 1, 1] + a[..., 0, 1] * a[..., 1, 0]
    subsets, signs = _ryser_tables(n)
    row_sums = a @ subsets
    return np.prod(row_sums, axis=-2) @ signs


def batch_permanent_minors(a: np.ndarray) -> np.ndarray:
    """``out[..., i, j]`` = permanent of ``a`` with row i and column j removed.

    This is the derivative of perm(a) with respect to entry (i, j).
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[-1]
    if n == 0:
        raise ValueError("no minors of an empty matrix")
    keep = [[k for k in range(n) if k != i] for i in range(n)]
    idx_r = np.array(keep)[:, None, :, None]
    idx_c = np.array(keep)[None, :, None, :]
    minors = a[..., idx_r, idx_c]  # (..., n, n, n-1, n-1)
    return batch_permanent(minors)


def _check_occupations(n_modes: int, s: Sequence[int], t: Sequence[int]) -> None:
    if len(s) != n_modes or len(t) != n_modes:
        raise ValueError(f"occupations {tuple(s)}, {tuple(t)} do not match {n_modes} modes")
    if sum(s) != sum(t):
        raise ValueError(f"photon-count mismatch: {sum(s)} in, {sum(t)} out")
    if min(s, default=0) < 0 or min(t, default=0) < 0:
        raise ValueError("occupations must be non-negative")


def expand_occupation(occ: Sequence[int]) -> list[int]:
    """Mode index repeated by its photon count, ascending: (2,0,1) -> [0,0,2]."""
    return [mode for mode, count in enumerate(occ) for _ in range(count)]


def build_submatrix(u, s: Sequence[int], t: Sequence[int]) -> np.ndarray:
    """Rows of ``u`` repeated per output ``t``, columns per input ``s``."""
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"transfer matrix must be square, got {u.shape}")
    _check_occupations(u.shape[0], s, t)
    rows = expand_occupation(t)
    cols = expand_occupation(s)
    return u[np.ix_(rows, cols)]


def occupation_factorial(occ: Sequence[int]) -> int:
    return math.prod(math.factorial(n) for n in occ)


def transition_amplitude(u, s: Sequence[int], t: Sequence[int]) -> complex:
    """<t| U |s> = perm(U_{t,s}) / sqrt(t! s!)."""
    sub = build_submatrix(u, s, t)
    return permanent_ryser(sub) / math.sqrt(occupation_factorial(s) * occupation_factorial(t))
