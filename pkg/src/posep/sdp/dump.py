"""Plain-text export of a problem for cross-checking with other solvers.

Line-oriented format, whitespace separated, 0-based indices:

    posep-sdp 1
    nw <n_w> neq <m_eq> blocks <k>
    block <b> <psd|nn> <size>
    c <col> <val>
    E <row> <col> <val>
    f <row> <val>
    F <b> <i> <j> <col> <val>
    end

A `c` line gives a nonzero objective coefficient on w[col].  `E`/`f`
lines give nonzeros of the equality system E w = f.  An `F` line states
that entry (i, j) of cone block b (and (j, i) by symmetry, i <= j) is a
linear function of w containing the term val * w[col]; values here are
plain matrix coefficients, without the sqrt(2) svec scaling.  For an
`nn` block, i == j indexes the component.
"""

import numpy as np
import scipy.sparse

from .problem import SQRT2, BlockStructure, SdpProblem


def dump_problem(problem, path):
    lines = ["posep-sdp 1",
             "nw %d neq %d blocks %d" % (problem.n_w, problem.m_eq,
                                         len(problem.blocks))]
    for b, (kind, n) in enumerate(problem.blocks.specs):
        lines.append("block %d %s %d" % (b, kind, n))
    for col in np.flatnonzero(problem.c):
        lines.append("c %d %.17g" % (col, problem.c[col]))
    rows, cols = np.nonzero(problem.E)
    for r, col in zip(rows, cols):
        lines.append("E %d %d %.17g" % (r, col, problem.E[r, col]))
    for r in np.flatnonzero(problem.f):
        lines.append("f %d %.17g" % (r, problem.f[r]))
    coo = problem.F.tocoo()
    triu_maps = {}
    for b, (kind, n) in enumerate(problem.blocks.specs):
        if kind == "psd":
            triu_maps[b] = np.triu_indices(n)
    offsets = problem.blocks.offsets
    for r, col, val in zip(coo.row, coo.col, coo.data):
        b = int(np.searchsorted(offsets, r, side="right") - 1)
        kind, n = problem.blocks.specs[b]
        local = r - offsets[b]
        if kind == "psd":
            i = int(triu_maps[b][0][local])
            j = int(triu_maps[b][1][local])
            coeff = val / SQRT2 if i != j else val
        else:
            i = j = int(local)
            coeff = val
        lines.append("F %d %d %d %d %.17g" % (b, i, j, col, coeff))
    lines.append("end")
    with open(path, "w") as handle:
        handle.write("\n".join(lines) + "\n")


def load_problem(path):
    with open(path) as handle:
        lines = [ln.split() for ln in handle if ln.strip()]
    if lines[0] != ["posep-sdp", "1"]:
        raise ValueError("not a posep-sdp dump")
    header = lines[1]
    n_w, m_eq, n_blocks = int(header[1]), int(header[3]), int(header[5])
    specs = [None] * n_blocks
    c = np.zeros(n_w)
    E_entries, f = [], np.zeros(m_eq)
    F_entries = []
    for parts in lines[2:]:
        tag = parts[0]
        if tag == "block":
            specs[int(parts[1])] = (parts[2], int(parts[3]))
        elif tag == "c":
            c[int(parts[1])] = float(parts[2])
        elif tag == "E":
            E_entries.append((int(parts[1]), int(parts[2]), float(parts[3])))
        elif tag == "f":
            f[int(parts[1])] = float(parts[2])
        elif tag == "F":
            F_entries.append((int(parts[1]), int(parts[2]), int(parts[3]),
                              int(parts[4]), float(parts[5])))
        elif tag == "end":
            break
        else:
            raise ValueError("unknown line tag %r" % tag)
    blocks = BlockStructure(specs)
    E = np.zeros((m_eq, n_w))
    for r, col, val in E_entries:
        E[r, col] = val
    rows, cols, data = [], [], []
    svec_row = {}
    for b, (kind, n) in enumerate(blocks.specs):
        if kind == "psd":
            iu = np.triu_indices(n)
            for local, (i, j) in enumerate(zip(*iu)):
                svec_row[(b, int(i), int(j))] = blocks.offsets[b] + local
        else:
            for i in range(n):
                svec_row[(b, i, i)] = blocks.offsets[b] + i
    for b, i, j, col, coeff in F_entries:
        kind, n = blocks.specs[b]
        rows.append(svec_row[(b, i, j)])
        cols.append(col)
        data.append(coeff * SQRT2 if (kind == "psd" and i != j) else coeff)
    F = scipy.sparse.coo_matrix((data, (rows, cols)),
                                shape=(blocks.total_dim, n_w)).tocsr()
    return SdpProblem(blocks, c, E, f, F)
