"""Monomial bases for the joint variables (x_1..x_p, y_1..y_q).

Everything downstream (moment vectors, moment and localizing matrices)
is indexed against a MonomialBasis, so the ordering here fixes the
coordinate system for the whole package.
"""

import math
from itertools import combinations_with_replacement

import numpy as np


class MonomialBasis:
    """All monomials in p + q variables up to a total degree bound.

    Ordering is graded lexicographic: lower total degree first, and within
    a degree block the concatenated exponent vector (x-variables before
    y-variables) in decreasing lexicographic order, so x_1 precedes x_2
    precedes y_1.  Position 0 is the constant monomial.  Because grading
    comes first, the degree-d' basis is a prefix of the degree-d basis for
    every d' <= d.
    """

    def __init__(self, p, q, degree_bound):
        if p < 1 or q < 1:
            raise ValueError("need p >= 1 and q >= 1")
        if degree_bound < 0:
            raise ValueError("degree bound must be nonnegative")
        self.p = p
        self.q = q
        self.nvars = p + q
        self.degree_bound = degree_bound
        expected = basis_size(p, q, degree_bound)
        if expected > np.iinfo(np.int32).max:
            raise ValueError("basis too large to index")
        self.entries = _enumerate(self.nvars, degree_bound)
        assert len(self.entries) == expected
        self._index = {e: i for i, e in enumerate(self.entries)}
        self.degrees = np.array([sum(e) for e in self.entries], dtype=np.int32)

    def __len__(self):
        return len(self.entries)

    def index_of(self, exponents):
        """Position of an exponent tuple; raises KeyError if out of range."""
        return self._index[tuple(exponents)]

    def size_at_degree(self, d):
        """Length of the degree-d prefix."""
        if d > self.degree_bound:
            raise ValueError("degree exceeds basis bound")
        return basis_size(self.p, self.q, d)

    def __repr__(self):
        return "MonomialBasis(p=%d, q=%d, degree_bound=%d)" % (
            self.p, self.q, self.degree_bound)


def basis_size(p, q, d):
    """C(p+q+d, d), the number of monomials of degree <= d in p+q variables."""
    return math.comb(p + q + d, d)


def _enumerate(nvars, dmax):
    entries = []
    for d in range(dmax + 1):
        block = []
        # multisets of variable slots of size d -> exponent tuples
        for combo in combinations_with_replacement(range(nvars), d):
            e = [0] * nvars
            for v in combo:
                e[v] += 1
            block.append(tuple(e))
        block.sort(key=lambda e: tuple(-c for c in e))
        entries.extend(block)
    return entries


def build_basis(p, q, d):
    return MonomialBasis(p, q, d)


def product_index_table(small, big):
    """Table T with T[i, j] = position in `big` of entries_small[i] * entries_small[j].

    `big` must have the same (p, q) and degree bound 2 * small.degree_bound.
    """
    if (small.p, small.q) != (big.p, big.q):
        raise ValueError("bases have mismatched variable counts")
    if big.degree_bound != 2 * small.degree_bound:
        raise ValueError("big basis must have twice the degree bound")
    n = len(small)
    table = np.empty((n, n), dtype=np.int32)
    for i in range(n):
        ei = small.entries[i]
        for j in range(i, n):
            ej = small.entries[j]
            prod = tuple(a + b for a, b in zip(ei, ej))
            idx = big.index_of(prod)
            table[i, j] = idx
            table[j, i] = idx
    return table


def shift_index_table(basis_small, basis_big, var):
    """Positions in `big` of x_var * m for every monomial m of `small`."""
    out = np.empty(len(basis_small), dtype=np.int32)
    for i, e in enumerate(basis_small.entries):
        lifted = list(e)
        lifted[var] += 1
        out[i] = basis_big.index_of(tuple(lifted))
    return out
