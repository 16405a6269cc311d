"""Pure numpy backend for the Schur-complement assembly.

For each psd block the scaled Gram matrix is

    H[a, b] = < mat(F e_b), Tinv mat(F e_a) Tinv >,

accumulated over blocks.  Columns are processed in chunks: the chunk's
constraint matrices are scattered into a dense (chunk, n, n) tensor,
congruence-transformed by Tinv with batched matrix products, and the
resulting rows are gathered through a sparse matrix holding the full
(n*n)-indexed entries of every column's constraint matrix.
"""

import numpy as np

CHUNK = 128


def psd_block_contribution(H, Tinv, block_data):
    n = Tinv.shape[0]
    colmap = block_data.colmap
    nact = colmap.size
    if nact == 0:
        return
    indptr = block_data.indptr
    ii, jj, cc = block_data.pos_i, block_data.pos_j, block_data.pos_c
    vals = np.where(ii == jj, cc, cc / np.sqrt(2.0))
    gmat_t = block_data.gmat_t
    col_of_pos = np.repeat(np.arange(nact), np.diff(indptr))
    for start in range(0, nact, CHUNK):
        stop = min(start + CHUNK, nact)
        k = stop - start
        p0, p1 = indptr[start], indptr[stop]
        kidx = col_of_pos[p0:p1] - start
        M = np.zeros((k, n, n))
        M[kidx, ii[p0:p1], jj[p0:p1]] = vals[p0:p1]
        M[kidx, jj[p0:p1], ii[p0:p1]] = vals[p0:p1]
        V = np.einsum("ub,kbc,cw->kuw", Tinv, M, Tinv, optimize=True)
        rows = (gmat_t @ V.reshape(k, n * n).T).T
        H[np.ix_(colmap[start:stop], colmap)] += rows


def build_h_psd(H, kdata, Tinv_blocks):
    for block_data, Tinv in zip(kdata.psd, Tinv_blocks):
        psd_block_contribution(H, Tinv, block_data)
