"""Schur-complement assembly kernels.

Each interior-point iteration needs H = F' (Tinv x Tinv) F where F maps
the free vector into the stacked cone space and T is the current
Nesterov-Todd scaling.  Assembly exploits that a column of F restricted
to a psd block is a sparse symmetric matrix: its congruence by Tinv is a
short sum of rank-two terms built from rows of Tinv.

Two interchangeable backends exist: a numba-jitted position-gather loop
and a batched numpy fallback (kernels_numpy).  Selection honors the
POSEP_KERNELS environment variable ("numba" or "numpy"); by default the
jitted path is used when numba imports cleanly.
"""

import os

import numpy as np
import scipy.sparse

from . import kernels_numpy

try:
    import numba
    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False


class PsdBlockData:
    """Positions of one psd block's F columns, grouped per active column.

    pos_i/pos_j are matrix indices of the svec rows touched, pos_c the
    svec-scaled coefficients; colmap holds the global w-index of each
    active column.  gmat_t gathers full rows of the block contribution
    for the numpy backend.
    """

    __slots__ = ("n", "indptr", "pos_i", "pos_j", "pos_c", "colmap", "gmat_t")

    def __init__(self, n, indptr, pos_i, pos_j, pos_c, colmap):
        self.n = n
        self.indptr = indptr
        self.pos_i = pos_i
        self.pos_j = pos_j
        self.pos_c = pos_c
        self.colmap = colmap
        nact = colmap.size
        col_of_pos = np.repeat(np.arange(nact), np.diff(indptr))
        diag = pos_i == pos_j
        off = ~diag
        rows = np.concatenate([col_of_pos[diag], col_of_pos[off],
                               col_of_pos[off]])
        cols = np.concatenate([pos_i[diag] * n + pos_i[diag],
                               pos_i[off] * n + pos_j[off],
                               pos_j[off] * n + pos_i[off]])
        data = np.concatenate([pos_c[diag], pos_c[off] / np.sqrt(2.0),
                               pos_c[off] / np.sqrt(2.0)])
        self.gmat_t = scipy.sparse.coo_matrix(
            (data, (rows, cols)), shape=(nact, n * n)).tocsr()


class KernelData:
    def __init__(self, problem):
        self.n_w = problem.n_w
        self.psd = []
        self.nn = []
        for b, (kind, n) in enumerate(problem.blocks.specs):
            lo = problem.blocks.offsets[b]
            hi = problem.blocks.offsets[b + 1]
            Fb = problem.F[lo:hi]
            if kind == "nn":
                self.nn.append(Fb.tocsr())
                continue
            Fc = Fb.tocsc()
            counts = np.diff(Fc.indptr)
            active = np.flatnonzero(counts)
            indptr = np.concatenate(
                [[0], np.cumsum(counts[active])]).astype(np.int64)
            iu0, iu1 = np.triu_indices(n)
            rows_local = Fc.indices
            self.psd.append(PsdBlockData(
                n, indptr,
                iu0[rows_local].astype(np.int64),
                iu1[rows_local].astype(np.int64),
                Fc.data.astype(np.float64),
                active.astype(np.int64)))


def _psd_block_h_python(H, Tinv, indptr, pos_i, pos_j, pos_c, colmap):
    n = Tinv.shape[0]
    nact = colmap.shape[0]
    isqrt2 = 1.0 / np.sqrt(2.0)
    sqrt2 = np.sqrt(2.0)
    V = np.zeros((n, n))
    for a in range(nact):
        for u in range(n):
            for w in range(n):
                V[u, w] = 0.0
        for r in range(indptr[a], indptr[a + 1]):
            i = pos_i[r]
            j = pos_j[r]
            c = pos_c[r]
            if i == j:
                for u in range(n):
                    cu = c * Tinv[i, u]
                    for w in range(n):
                        V[u, w] += cu * Tinv[i, w]
            else:
                cc = c * isqrt2
                for u in range(n):
                    cu1 = cc * Tinv[i, u]
                    cu2 = cc * Tinv[j, u]
                    for w in range(n):
                        V[u, w] += cu1 * Tinv[j, w] + cu2 * Tinv[i, w]
        ga = colmap[a]
        for b in range(a, nact):
            acc = 0.0
            for r in range(indptr[b], indptr[b + 1]):
                i = pos_i[r]
                j = pos_j[r]
                c = pos_c[r]
                if i == j:
                    acc += c * V[i, i]
                else:
                    acc += c * sqrt2 * V[i, j]
            H[ga, colmap[b]] += acc


if HAVE_NUMBA:
    _psd_block_h_jit = numba.njit(cache=True, fastmath=True)(
        _psd_block_h_python)

_backend = None


def selected_backend():
    """Active backend name, resolved once from POSEP_KERNELS."""
    global _backend
    if _backend is None:
        env = os.environ.get("POSEP_KERNELS", "").strip().lower()
        if env == "numpy":
            _backend = "numpy"
        elif env == "numba":
            if not HAVE_NUMBA:
                raise RuntimeError(
                    "POSEP_KERNELS=numba but numba is not importable")
            _backend = "numba"
        elif env:
            raise RuntimeError(
                "POSEP_KERNELS must be 'numba' or 'numpy', got %r" % env)
        else:
            _backend = "numba" if HAVE_NUMBA else "numpy"
    return _backend


def build_h(kdata, scalings, backend=None):
    """Assemble H = F' (Tinv x Tinv) F for the current scaling.

    scalings runs over all blocks in order: Tinv matrices for psd blocks,
    weight vectors z_i/s_i for nn blocks.
    """
    if backend is None:
        backend = selected_backend()
    H = np.zeros((kdata.n_w, kdata.n_w))
    psd_scalings = []
    nn_weights = []
    for entry in scalings:
        if entry.ndim == 2:
            psd_scalings.append(entry)
        else:
            nn_weights.append(entry)
    if backend == "numba":
        for block_data, Tinv in zip(kdata.psd, psd_scalings):
            _psd_block_h_jit(H, Tinv, block_data.indptr, block_data.pos_i,
                             block_data.pos_j, block_data.pos_c,
                             block_data.colmap)
        H += np.triu(H, 1).T
    elif backend == "numpy":
        kernels_numpy.build_h_psd(H, kdata, psd_scalings)
    else:
        raise ValueError("unknown backend %r" % backend)
    for Fnn, w in zip(kdata.nn, nn_weights):
        contrib = (Fnn.T @ scipy.sparse.diags(w) @ Fnn).tocoo()
        H[contrib.row, contrib.col] += contrib.data
    return H
