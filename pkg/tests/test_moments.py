import numpy as np
import pytest

from posep.forms import ones_poly, sphere_poly
from posep.moments import (
    Tms,
    cached_basis,
    dedup_rows,
    eliminate_dependent_rows,
    flatness_check,
    ideal_equality_rows,
    localizing_matrix,
    moment_matrix,
    matrix_rank_stable,
    stack_rows,
    tms_from_atoms,
)


def k_atoms(rng, r, p, q):
    """Random atoms on the bi-sphere with nonnegative coordinate sums."""
    out = []
    for _ in range(r):
        u = rng.standard_normal(p)
        v = rng.standard_normal(q)
        u /= np.linalg.norm(u)
        v /= np.linalg.norm(v)
        if u.sum() < 0:
            u = -u
        if v.sum() < 0:
            v = -v
        out.append((rng.uniform(0.3, 2.0), u, v))
    return out


def monomial_vector(basis, u, v):
    point = np.concatenate([u, v])
    return np.prod(point ** np.array(basis.entries, dtype=float), axis=1)


def test_tms_from_atoms_all_ones():
    w = tms_from_atoms([(1.0, np.array([1.0]), np.array([1.0]))], 2)
    assert np.allclose(w.values, np.ones(6))


def test_tms_constant_entry_is_mass():
    rng = np.random.default_rng(0)
    atoms = k_atoms(rng, 4, 2, 3)
    w = tms_from_atoms(atoms, 4)
    assert w.values[0] == pytest.approx(sum(c for c, _, _ in atoms))


def test_tms_matches_direct_monomial_evaluation():
    rng = np.random.default_rng(1)
    atoms = k_atoms(rng, 3, 2, 2)
    w = tms_from_atoms(atoms, 6)
    for idx in rng.integers(0, len(w.basis), size=40):
        e = w.basis.entries[idx]
        expect = sum(c * np.prod(np.concatenate([u, v]) ** np.array(e, dtype=float))
                     for c, u, v in atoms)
        assert w.values[idx] == pytest.approx(expect, rel=1e-12, abs=1e-12)


def test_truncate_is_prefix():
    rng = np.random.default_rng(2)
    atoms = k_atoms(rng, 2, 2, 2)
    w = tms_from_atoms(atoms, 6)
    w4 = w.truncate(4)
    assert w4.basis.degree_bound == 4
    assert np.array_equal(w4.values, w.values[:len(w4.basis)])


def test_moment_matrix_rank_one():
    rng = np.random.default_rng(3)
    [(c, u, v)] = k_atoms(rng, 1, 2, 2)
    w = tms_from_atoms([(1.0, u, v)], 4)
    M = moment_matrix(w, 2)
    m = monomial_vector(cached_basis(2, 2, 2), u, v)
    assert np.allclose(M, np.outer(m, m), atol=1e-12)
    assert matrix_rank_stable(M, 1e-6)[0] == 1
    assert np.linalg.eigvalsh(M).min() >= -1e-12


def test_moment_matrix_rank_equals_atom_count():
    rng = np.random.default_rng(4)
    for r in [2, 4, 6]:
        atoms = k_atoms(rng, r, 2, 2)
        w = tms_from_atoms(atoms, 6)
        M = moment_matrix(w, 3)
        V = np.stack([monomial_vector(cached_basis(2, 2, 3), u, v)
                      for _, u, v in atoms], axis=1)
        C = np.diag([c for c, _, _ in atoms])
        assert np.allclose(M, V @ C @ V.T, atol=1e-10)
        assert matrix_rank_stable(M, 1e-6)[0] == r


def test_moment_matrix_nesting():
    rng = np.random.default_rng(5)
    atoms = k_atoms(rng, 3, 2, 2)
    w = tms_from_atoms(atoms, 6)
    M2 = moment_matrix(w, 2)
    M3 = moment_matrix(w, 3)
    n = M2.shape[0]
    assert np.array_equal(M3[:n, :n], M2)


def test_localizing_matrix_with_one_is_moment_matrix():
    rng = np.random.default_rng(6)
    atoms = k_atoms(rng, 2, 2, 2)
    w = tms_from_atoms(atoms, 4)
    one = {(0, 0, 0, 0): 1.0}
    assert np.allclose(localizing_matrix(w, one, 2), moment_matrix(w, 2))


def test_localizing_matrix_psd_for_supported_constraint():
    rng = np.random.default_rng(7)
    atoms = k_atoms(rng, 3, 2, 3)
    w = tms_from_atoms(atoms, 6)
    for g in [ones_poly(5, range(2)), ones_poly(5, range(2, 5))]:
        L = localizing_matrix(w, g, 3)
        assert np.linalg.eigvalsh(L).min() >= -1e-8


def test_localizing_matrix_vanishes_on_variety():
    rng = np.random.default_rng(8)
    atoms = k_atoms(rng, 3, 2, 2)
    w = tms_from_atoms(atoms, 6)
    for h in [sphere_poly(4, range(2)), sphere_poly(4, range(2, 4))]:
        assert np.max(np.abs(localizing_matrix(w, h, 3))) <= 1e-10


def test_ideal_rows_hand_enumerated():
    basis = cached_basis(1, 1, 3)
    h = sphere_poly(2, range(1))  # x^2 - 1 in variables (x, y)
    rows = ideal_equality_rows(h, basis)
    ix = basis.index_of
    expect = [
        {ix((2, 0)): 1.0, ix((0, 0)): -1.0},
        {ix((3, 0)): 1.0, ix((1, 0)): -1.0},
        {ix((2, 1)): 1.0, ix((0, 1)): -1.0},
    ]
    assert rows == expect


def test_ideal_rows_count_for_degree_five():
    # degree-5 polynomial against a degree-6 basis: multipliers of degree <= 1
    p, q = 2, 2
    basis = cached_basis(p, q, 6)
    h = {(1, 0, 0, 0): 1.0, (3, 2, 0, 0): -0.5}
    rows = ideal_equality_rows(h, basis)
    assert len(rows) == 1 + p + q


def test_ideal_rows_annihilated_by_supported_atoms():
    rng = np.random.default_rng(9)
    atoms = k_atoms(rng, 3, 2, 2)
    w = tms_from_atoms(atoms, 6)
    for h in [sphere_poly(4, range(2)), sphere_poly(4, range(2, 4))]:
        for row in ideal_equality_rows(h, w.basis):
            val = sum(c * w.values[i] for i, c in row.items())
            assert abs(val) <= 1e-10


def test_flatness_flat_for_generic_atoms():
    rng = np.random.default_rng(10)
    h = (sphere_poly(4, range(2)), sphere_poly(4, range(2, 4)))
    g = (ones_poly(4, range(2)), ones_poly(4, range(2, 4)))
    atoms = k_atoms(rng, 3, 2, 2)
    w = tms_from_atoms(atoms, 6)
    rep = flatness_check(w, 3, h, g, "inner")
    assert rep.is_flat
    assert rep.rank_low == rep.rank_high == 3
    rep = flatness_check(w, 2, h, g, "outer")
    assert rep.is_flat
    assert rep.rank_low == rep.rank_high == 3


def test_flatness_zero_tms_degenerate():
    w = Tms(cached_basis(1, 1, 4), np.zeros(15))
    h = (sphere_poly(2, range(1)), sphere_poly(2, range(1, 2)))
    g = (ones_poly(2, range(1)), ones_poly(2, range(1, 2)))
    rep = flatness_check(w, 2, h, g, "inner")
    assert rep.is_flat
    assert rep.rank_low == rep.rank_high == 0


def test_flatness_rejects_perturbed_tail():
    rng = np.random.default_rng(11)
    h = (sphere_poly(2, range(1)), sphere_poly(2, range(1, 2)))
    g = (ones_poly(2, range(1)), ones_poly(2, range(1, 2)))
    atoms = k_atoms(rng, 2, 1, 1)
    w = tms_from_atoms(atoms, 6)
    lo = len(cached_basis(1, 1, 4))
    w.values[lo:] += 1e-2 * rng.standard_normal(len(w.basis) - lo)
    rep = flatness_check(w, 3, h, g, "inner")
    assert not rep.is_flat


def test_flatness_prefix_consistency():
    rng = np.random.default_rng(12)
    h = (sphere_poly(4, range(2)), sphere_poly(4, range(2, 4)))
    g = (ones_poly(4, range(2)), ones_poly(4, range(2, 4)))
    atoms = k_atoms(rng, 2, 2, 2)
    w = tms_from_atoms(atoms, 8)
    a = flatness_check(w, 2, h, g, "outer")
    b = flatness_check(w.truncate(6), 2, h, g, "outer")
    assert (a.rank_low, a.rank_high, a.is_flat) == (b.rank_low, b.rank_high, b.is_flat)


def test_dedup_rows():
    rows = [{0: 1.0, 2: -1.0}, {2: -1.0, 0: 1.0}, {1: 1.0}]
    assert len(dedup_rows(rows)) == 2


def test_eliminate_dependent_rows():
    rows = [{0: 1.0, 1: 1.0}, {1: 1.0, 2: -1.0}, {0: 1.0, 1: 2.0, 2: -1.0}]
    E, f = stack_rows(rows, [1.0, 2.0, 3.0], 4)
    Ek, fk, kept, dropped = eliminate_dependent_rows(E, f)
    assert len(kept) == 2 and len(dropped) == 1
    # kept rows stay unit-norm scaled copies of originals
    for r, (row_idx) in enumerate(kept):
        scale = np.linalg.norm(E[row_idx])
        assert np.allclose(Ek[r] * scale, E[row_idx])
        assert fk[r] * scale == pytest.approx(f[row_idx])


def test_eliminate_keeps_full_rank_set():
    rng = np.random.default_rng(13)
    E = rng.standard_normal((5, 8))
    E = np.vstack([E, E[0] + E[1], 2.0 * E[2]])
    f = rng.standard_normal(7)
    Ek, fk, kept, dropped = eliminate_dependent_rows(E, f)
    assert len(kept) == 5
    assert np.linalg.matrix_rank(Ek) == 5
