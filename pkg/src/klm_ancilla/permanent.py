"""Matrix permanents: Ryser's inclusion-exclusion formula and the naive sum."""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def _subset_table(n: int) -> tuple[np.ndarray, np.ndarray]:
    masks = np.arange(1, 2**n)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(float)
    signs = np.where(bits.sum(axis=1) % 2 == n % 2, 1.0, -1.0)
    bits.setflags(write=False)
    signs.setflags(write=False)
    return bits, signs


def ryser_permanent(matrix) -> complex:
    """Permanent of a square matrix in O(2^n n^2) using Ryser's formula.

    ``perm(A) = (-1)^n sum_{S} (-1)^{|S|} prod_i sum_{j in S} a_ij``. All
    nonempty column subsets are evaluated at once. The final sum uses
    ``math.fsum`` on the real and imaginary parts to limit cancellation error.
    """
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"permanent needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    bits, signs = _subset_table(n)
    terms = signs * np.prod(bits @ a.T, axis=1)
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def naive_permanent(matrix) -> complex:
    """Permanent as the sum over all n! permutations. Use it only as a reference."""
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"permanent needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    terms = [
        math.prod((a[i, p[i]] for i in range(n)), start=1 + 0j)
        for p in itertools.permutations(range(n))
    ]
    return complex(
        math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms)
    )
