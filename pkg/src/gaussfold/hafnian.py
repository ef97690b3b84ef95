"""Hafnians of symmetric even-dimensional matrices."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

SYMMETRY_TOL = 1e-12


def _prepare(matrix: np.ndarray) -> np.ndarray:
    mat = np.asarray(matrix, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("hafnian needs a square matrix")
    if mat.shape[0] % 2:
        raise ValueError(f"hafnian needs an even dimension, got {mat.shape[0]}")
    if mat.size:
        scale = max(1.0, float(np.max(np.abs(mat))))
        if np.max(np.abs(mat - mat.T)) > SYMMETRY_TOL * scale:
            raise ValueError("hafnian needs a symmetric matrix")
    return 0.5 * (mat + mat.T)


def _matchings(mat: np.ndarray, remaining: tuple[int, ...]) -> complex:
    if not remaining:
        return 1.0 + 0j
    first, rest = remaining[0], remaining[1:]
    total = 0j
    for pos, partner in enumerate(rest):
        if mat[first, partner] != 0:
            total += mat[first, partner] * _matchings(mat, rest[:pos] + rest[pos + 1 :])
    return total


def hafnian_reference(matrix: np.ndarray) -> complex:
    """Sum over all (2K-1)!! perfect matchings, enumerated recursively."""
    mat = _prepare(matrix)
    return _matchings(mat, tuple(range(mat.shape[0])))


def hafnian(matrix: np.ndarray) -> complex:
    """Hafnian by memoized recursion over subsets, O(2^n n) instead of (n-1)!!.

    The lowest unmatched index is always paired first, so each subset of
    remaining indices is solved once.
    """
    mat = _prepare(matrix)
    n = mat.shape[0]
    if n == 0:
        return 1.0 + 0j

    @lru_cache(maxsize=None)
    def solve(mask: int) -> complex:
        if mask == 0:
            return 1.0 + 0j
        low = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << low)
        total = 0j
        bits = rest
        while bits:
            j = (bits & -bits).bit_length() - 1
            bits &= bits - 1
            if mat[low, j] != 0:
                total += mat[low, j] * solve(rest & ~(1 << j))
        return total

    return complex(solve((1 << n) - 1))
