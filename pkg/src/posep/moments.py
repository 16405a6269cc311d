"""Truncated multi-sequences, moment and localizing matrices, truncated-ideal
equality rows, and the flatness tests that drive the two decision algorithms.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse

from .forms import poly_degree
from .monomials import MonomialBasis, product_index_table


@lru_cache(maxsize=128)
def cached_basis(p, q, d):
    return MonomialBasis(p, q, d)


@lru_cache(maxsize=128)
def cached_product_table(p, q, t):
    return product_index_table(cached_basis(p, q, t), cached_basis(p, q, 2 * t))


class Tms:
    """Truncated multi-sequence: values aligned with a degree-2k basis."""

    def __init__(self, basis, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (len(basis),):
            raise ValueError("value vector does not match basis size")
        self.basis = basis
        self.values = values

    @property
    def p(self):
        return self.basis.p

    @property
    def q(self):
        return self.basis.q

    def truncate(self, degree):
        """Prefix slice w|_degree as a Tms over the smaller basis."""
        small = cached_basis(self.p, self.q, degree)
        return Tms(small, self.values[:len(small)])

    def value(self, exponents):
        return self.values[self.basis.index_of(exponents)]


def tms_from_atoms(atoms, degree):
    """Moments of the atomic measure up to the given degree."""
    first = next(iter(atoms))
    p, q = len(first[1]), len(first[2])
    basis = cached_basis(p, q, degree)
    exps = np.array(basis.entries, dtype=float)
    values = np.zeros(len(basis))
    for c, u, v in atoms:
        point = np.concatenate([u, v])
        values += c * np.prod(point ** exps, axis=1)
    return Tms(basis, values)


def moment_matrix(w, t):
    """M_t(w): entries w at products of degree-<=t monomials."""
    if 2 * t > w.basis.degree_bound:
        raise ValueError("tms too short for moment matrix of order %d" % t)
    table = cached_product_table(w.p, w.q, t)
    return w.values[table]


def localizing_matrix(w, theta, t):
    """L_theta at order t: rows/cols are monomials a with deg(theta * a^2) <= 2t."""
    dtheta = poly_degree(theta)
    if dtheta > 2 * t:
        raise ValueError("polynomial degree exceeds localizing order")
    side_degree = (2 * t - dtheta) // 2
    small = cached_basis(w.p, w.q, side_degree)
    n = len(small)
    out = np.zeros((n, n))
    index_of = w.basis.index_of
    for i in range(n):
        ei = small.entries[i]
        for j in range(i, n):
            ej = small.entries[j]
            total = 0.0
            for gamma, coeff in theta.items():
                e = tuple(a + b + c for a, b, c in zip(ei, ej, gamma))
                total += coeff * w.values[index_of(e)]
            out[i, j] = total
            out[j, i] = total
    return out


def cone_block_triplets(p, q, t, theta=None):
    """Sparse rows of the map w -> svec(M_t(w)), or w -> svec(L_theta(w))
    when theta is given.  Row order is the upper triangle scanned row by
    row; off-diagonal rows carry the sqrt(2) svec weight.

    Returns (side, rows, cols, vals) with columns into the degree-2t basis.
    """
    sqrt2 = np.sqrt(2.0)
    rows, cols, vals = [], [], []
    if theta is None:
        small = cached_basis(p, q, t)
        table = cached_product_table(p, q, t)
        n = len(small)
        r = 0
        for i in range(n):
            for j in range(i, n):
                rows.append(r)
                cols.append(int(table[i, j]))
                vals.append(1.0 if i == j else sqrt2)
                r += 1
        return n, rows, cols, vals
    dtheta = poly_degree(theta)
    if dtheta > 2 * t:
        raise ValueError("polynomial degree exceeds localizing order")
    side_degree = (2 * t - dtheta) // 2
    small = cached_basis(p, q, side_degree)
    big = cached_basis(p, q, 2 * t)
    index_of = big.index_of
    n = len(small)
    r = 0
    for i in range(n):
        ei = small.entries[i]
        for j in range(i, n):
            ej = small.entries[j]
            scale = 1.0 if i == j else sqrt2
            for gamma, coeff in theta.items():
                e = tuple(a + b + c for a, b, c in zip(ei, ej, gamma))
                rows.append(r)
                cols.append(index_of(e))
                vals.append(scale * coeff)
            r += 1
    return n, rows, cols, vals


def cone_blocks(p, q, k, g):
    """Block specs and the sparse map from w to the stacked svec images
    (M_k(w), L_{g_1}(w), ...).  Returns (specs, F) with F in csr form."""
    specs = []
    rows, cols, vals = [], [], []
    offset = 0
    for theta in (None,) + tuple(g):
        side, br, bc, bv = cone_block_triplets(p, q, k, theta)
        specs.append(("psd", side))
        rows.extend(r + offset for r in br)
        cols.extend(bc)
        vals.extend(bv)
        offset += side * (side + 1) // 2
    n_w = len(cached_basis(p, q, 2 * k))
    F = scipy.sparse.csr_matrix(
        scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(offset, n_w)))
    return specs, F


def ideal_equality_rows(h, basis):
    """Sparse functionals <h * m, w> = 0 for all monomials m with
    deg(h * m) <= the basis degree bound.  Rows are dicts {position: coeff}."""
    dh = poly_degree(h)
    if dh > basis.degree_bound:
        raise ValueError("polynomial degree exceeds basis bound")
    mult_count = basis.size_at_degree(basis.degree_bound - dh)
    rows = []
    for m in basis.entries[:mult_count]:
        row = {}
        for gamma, coeff in h.items():
            e = tuple(a + b for a, b in zip(gamma, m))
            idx = basis.index_of(e)
            row[idx] = row.get(idx, 0.0) + coeff
        rows.append({k: v for k, v in row.items() if v != 0.0})
    return rows


def dedup_rows(rows):
    """Drop rows that are exact duplicates after canonical ordering."""
    seen = set()
    out = []
    for row in rows:
        key = tuple(sorted(row.items()))
        if key not in seen:
            seen.add(key)
            out.append(row)
    return out


def stack_rows(rows, rhs, n):
    """Dense (E, f) from sparse rows and their right-hand sides."""
    E = np.zeros((len(rows), n))
    for r, row in enumerate(rows):
        for idx, coeff in row.items():
            E[r, idx] = coeff
    return E, np.asarray(rhs, dtype=float)


def eliminate_dependent_rows(E, f, tol=1e-10):
    """Keep a maximal independent subset of rows of E, found by pivoted QR
    on E^T.  Rows are first normalized to unit length (f rescaled along).

    Returns (E_kept, f_kept, kept, dropped) with index lists into the input.
    """
    E = np.array(E, dtype=float)
    f = np.array(f, dtype=float)
    norms = np.linalg.norm(E, axis=1)
    nonzero = norms > tol
    zero_rows = np.where(~nonzero)[0]
    for r in zero_rows:
        if abs(f[r]) > tol:
            raise ValueError("inconsistent all-zero equality row")
    E = E[nonzero]
    f = f[nonzero] / norms[nonzero]
    E = E / norms[nonzero, None]
    live = np.where(nonzero)[0]
    if E.shape[0] == 0:
        return E, f, [], list(zero_rows)
    _, R, piv = scipy.linalg.qr(E.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size and diag[0] > 0:
        rank = int(np.sum(diag > tol * diag[0]))
    else:
        rank = 0
    kept_local = sorted(piv[:rank])
    dropped_local = sorted(set(range(E.shape[0])) - set(kept_local))
    kept = [int(live[i]) for i in kept_local]
    dropped = [int(live[i]) for i in dropped_local] + [int(r) for r in zero_rows]
    return E[kept_local], f[kept_local], kept, sorted(dropped)


@dataclass
class FlatnessReport:
    t: int
    rank_low: int
    rank_high: int
    equality_residual: float
    localizing_min_eig: float
    moment_min_eig: float
    is_flat: bool


def matrix_rank_stable(M, rank_tol):
    """Number of singular values above rank_tol; requires agreement with a
    relative count (1e-9 * sigma_max) and returns (rank, agree)."""
    if M.size == 0:
        return 0, True
    sigma = np.abs(scipy.linalg.eigvalsh(M))
    smax = sigma.max()
    abs_count = int(np.sum(sigma > rank_tol))
    rel_count = int(np.sum(sigma > 1e-9 * smax)) if smax > 0 else 0
    return abs_count, abs_count == rel_count


def flatness_check(w, t, h, g, mode, rank_tol=1e-6, psd_tol=1e-7, eq_tol=1e-6):
    """Rank-stabilization test between consecutive moment matrices.

    mode 'inner' compares rank M_{t-1} vs rank M_t on w|_{2t};
    mode 'outer' compares rank M_t vs rank M_{t+1} on w|_{2t+2}.
    """
    if mode not in ("inner", "outer"):
        raise ValueError("mode must be 'inner' or 'outer'")
    T = t if mode == "inner" else t + 1
    if 2 * T > w.basis.degree_bound:
        raise ValueError("tms too short for the requested check")
    omega = w.truncate(2 * T)
    M_low = moment_matrix(omega, T - 1)
    M_high = moment_matrix(omega, T)
    rank_low, ok_low = matrix_rank_stable(M_low, rank_tol)
    rank_high, ok_high = matrix_rank_stable(M_high, rank_tol)

    residual = 0.0
    for hi in h:
        for row in ideal_equality_rows(hi, omega.basis):
            residual = max(residual, abs(sum(c * omega.values[i]
                                             for i, c in row.items())))
    loc_min = np.inf
    for gj in g:
        eigs = scipy.linalg.eigvalsh(localizing_matrix(omega, gj, T))
        if eigs.size:
            loc_min = min(loc_min, eigs.min())
    if not np.isfinite(loc_min):
        loc_min = 0.0
    mom_min = float(scipy.linalg.eigvalsh(M_high).min()) if M_high.size else 0.0

    is_flat = (rank_low == rank_high and ok_low and ok_high
               and residual <= eq_tol
               and loc_min >= -psd_tol
               and mom_min >= -psd_tol)
    return FlatnessReport(t=t, rank_low=rank_low, rank_high=rank_high,
                          equality_residual=float(residual),
                          localizing_min_eig=float(loc_min),
                          moment_min_eig=float(mom_min), is_flat=bool(is_flat))
