import numpy as np
import pytest

from posep.monomials import (
    MonomialBasis,
    basis_size,
    build_basis,
    product_index_table,
    shift_index_table,
)


def test_sizes():
    assert len(build_basis(2, 2, 3)) == 35
    assert len(build_basis(4, 4, 3)) == 165
    assert len(build_basis(1, 1, 2)) == basis_size(1, 1, 2) == 6


def test_leading_entries_1_1():
    b = build_basis(1, 1, 2)
    assert b.entries[0] == (0, 0)
    assert b.entries[1] == (1, 0)
    assert b.entries[2] == (0, 1)
    assert b.entries[3] == (2, 0)
    assert b.entries[4] == (1, 1)
    assert b.entries[5] == (0, 2)


def test_graded_then_lex():
    b = build_basis(2, 1, 3)
    degs = [sum(e) for e in b.entries]
    assert degs == sorted(degs)
    for d in range(4):
        block = [e for e in b.entries if sum(e) == d]
        assert block == sorted(block, key=lambda e: tuple(-c for c in e))


def test_prefix_property():
    big = build_basis(2, 2, 4)
    for d in range(5):
        small = build_basis(2, 2, d)
        assert big.entries[:len(small)] == small.entries
        assert big.size_at_degree(d) == len(small)


def test_index_of_matches_linear_scan():
    b = build_basis(3, 2, 3)
    for i, e in enumerate(b.entries):
        assert b.index_of(e) == i
        assert b.entries.index(e) == i
    with pytest.raises(KeyError):
        b.index_of((4, 0, 0, 0, 0))


def test_product_table():
    small = build_basis(2, 2, 2)
    big = build_basis(2, 2, 4)
    table = product_index_table(small, big)
    assert table.shape == (len(small), len(small))
    assert np.array_equal(table, table.T)
    rng = np.random.default_rng(0)
    for _ in range(200):
        i, j = rng.integers(0, len(small), size=2)
        prod = tuple(a + b for a, b in zip(small.entries[i], small.entries[j]))
        assert big.entries[table[i, j]] == prod


def test_shift_table():
    small = build_basis(2, 1, 2)
    big = build_basis(2, 1, 3)
    for var in range(3):
        t = shift_index_table(small, big, var)
        for i, e in enumerate(small.entries):
            lifted = list(e)
            lifted[var] += 1
            assert big.entries[t[i]] == tuple(lifted)


def test_mismatched_tables_rejected():
    with pytest.raises(ValueError):
        product_index_table(build_basis(2, 2, 2), build_basis(2, 2, 3))
    with pytest.raises(ValueError):
        product_index_table(build_basis(2, 1, 2), build_basis(2, 2, 4))
