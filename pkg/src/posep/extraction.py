"""Atom recovery from flat moment matrices.

When the moment matrix of a truncated multi-sequence has stabilized rank
r, the sequence admits an r-atomic representing measure.  The support is
read off the joint eigenstructure of the multiplication operators on the
column space, and the weights are fitted by least squares afterwards.
"""

import numpy as np
import scipy.linalg

from .forms import AtomicMeasure
from .moments import cached_basis, matrix_rank_stable, moment_matrix
from .monomials import shift_index_table

SEPARATION_TOL = 1e-8
RESIDUAL_TOL = 1e-5
WEIGHT_TOL = 1e-8
PIVOT_TOL = 1e-10


class ExtractionFailed(Exception):
    """Raised when no acceptable atomic measure can be recovered."""


def _shift_operators(V, r, basis_low, basis_high):
    """Multiplication operator per variable on a pivoted monomial basis.

    Rows of V are indexed by basis_high; the operator basis is chosen by
    pivoted QR among the rows of degree below the top, so every shifted
    monomial stays inside basis_high.
    """
    n_low = len(basis_low)
    _, R, piv = scipy.linalg.qr(V[:n_low].T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size < r or diag[0] == 0.0 or diag[r - 1] < PIVOT_TOL * diag[0]:
        raise ExtractionFailed(
            "column space has no basis of degree <= %d" % basis_low.degree_bound)
    pivots = np.sort(piv[:r])
    B = V[pivots]
    lu = scipy.linalg.lu_factor(B)
    ops = []
    for var in range(basis_low.nvars):
        table = shift_index_table(basis_low, basis_high, var)
        ops.append(scipy.linalg.lu_solve(lu, V[table[pivots]]))
    return ops


def _joint_diagonal(ops, rng):
    """Coordinates of the common eigenvectors via an ordered real Schur form
    of a random combination; retried on clustered or complex eigenvalues."""
    r = ops[0].shape[0]
    for _ in range(4):
        xi = rng.standard_normal(len(ops))
        N = sum(c * op for c, op in zip(xi, ops))
        T, Q = scipy.linalg.schur(N, output="real")
        scale = 1.0 + np.abs(T).max()
        if r > 1:
            sub = np.abs(np.diag(T, -1)).max()
            lam = np.diag(T)
            gap = np.abs(lam[:, None] - lam[None, :])
            gap[np.diag_indices(r)] = np.inf
            if sub > SEPARATION_TOL * scale or gap.min() < SEPARATION_TOL:
                continue
        coords = np.empty((len(ops), r))
        for i, op in enumerate(ops):
            coords[i] = np.diag(Q.T @ op @ Q)
        return coords
    raise ExtractionFailed("shift eigenvalues failed to separate")


def extract_atoms(w, t, rank_tol=1e-6, seed=0, require_stable_rank=True):
    """Recover the atomic measure behind a tms that is flat at order t.

    Requires rank M_{t-1}(w) = rank M_t(w); the moment matrix M_t is
    factored, multiplication operators are built on a degree-(t-1) basis
    of its column space, and atom coordinates come out of an ordered real
    Schur form of a random operator combination.  Weights are fitted by
    least squares against the full degree-2t truncation using the raw
    coordinates; only then are atom signs flipped so both coordinate sums
    are nonnegative, which leaves weights and all even moments unchanged.

    require_stable_rank=False skips the two-rule rank agreement and uses
    the absolute count; callers doing speculative rounding of noisy data
    rely on the reconstruction-residual gate instead.
    """
    if t < 1:
        raise ValueError("order must be at least 1")
    w2t = w.truncate(2 * t)
    M = moment_matrix(w2t, t)
    r, stable = matrix_rank_stable(M, rank_tol)
    if r == 0:
        raise ExtractionFailed("moment matrix has rank zero")
    if require_stable_rank and not stable:
        raise ExtractionFailed("moment matrix rank is ambiguous")
    lam, U = scipy.linalg.eigh(M)
    V = U[:, -r:] * np.sqrt(np.maximum(lam[-r:], 0.0))

    basis_high = cached_basis(w.p, w.q, t)
    basis_low = cached_basis(w.p, w.q, t - 1)
    ops = _shift_operators(V, r, basis_low, basis_high)
    rng = np.random.default_rng(seed)
    coords = _joint_diagonal(ops, rng)

    p = w.p
    us, vs = [], []
    for s in range(r):
        u = coords[:p, s]
        v = coords[p:, s]
        nu, nv = np.linalg.norm(u), np.linalg.norm(v)
        if nu < 1e-6 or nv < 1e-6:
            raise ExtractionFailed("extracted atom collapsed to zero")
        us.append(u / nu)
        vs.append(v / nv)

    basis_full = cached_basis(w.p, w.q, 2 * t)
    exps = np.array(basis_full.entries, dtype=float)
    design = np.empty((len(basis_full), r))
    for s in range(r):
        point = np.concatenate([us[s], vs[s]])
        design[:, s] = np.prod(point ** exps, axis=1)
    weights = np.linalg.lstsq(design, w2t.values, rcond=None)[0]

    if weights.min() < -1e-6:
        raise ExtractionFailed("negative fitted weight %.3e" % weights.min())
    if weights.min() < WEIGHT_TOL:
        raise ExtractionFailed("fitted weight below %.0e" % WEIGHT_TOL)
    residual = np.abs(design @ weights - w2t.values).max()
    if residual > RESIDUAL_TOL:
        raise ExtractionFailed("reconstruction residual %.3e" % residual)

    # Canonical signs only after the fit: flipping u or v changes odd
    # moments, so the design matrix must use the raw coordinates.
    for s in range(r):
        if us[s].sum() < 0:
            us[s] = -us[s]
        if vs[s].sum() < 0:
            vs[s] = -vs[s]
    return AtomicMeasure(zip(weights, us, vs))
