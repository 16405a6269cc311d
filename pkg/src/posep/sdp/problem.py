"""Problem containers for the semidefinite solver.

The solver-native shape is

    minimize    c'w
    subject to  E w = f,
                F w = s,   s in K,

with w free and K a product of dense PSD blocks and nonnegative-orthant
blocks, stored through the scaled-vectorization (svec) of each PSD block.
Moment relaxations construct this shape directly (w is the moment vector);
standard-form problems min <C,X> s.t. <A_i,X> = b_i, X psd embed via
w = svec(X), F = identity.

The conic dual is  max f'y  s.t.  E'y + F'z = c, z in K, which is where
infeasibility certificates live: a dual improving ray (y, z) has
E'y + F'z = 0, z in K, f'y > 0.
"""

import numpy as np
import scipy.sparse

SQRT2 = np.sqrt(2.0)


def svec(M):
    """Scaled upper-triangle vectorization: svec(U) . svec(V) = <U, V>."""
    n = M.shape[0]
    iu = np.triu_indices(n)
    out = M[iu].copy()
    out[iu[0] != iu[1]] *= SQRT2
    return out


def smat(v, n):
    iu = np.triu_indices(n)
    M = np.zeros((n, n))
    vals = np.asarray(v, dtype=float).copy()
    off = iu[0] != iu[1]
    vals[off] /= SQRT2
    M[iu] = vals
    M[(iu[1], iu[0])] = vals
    return M


def svec_dim(n):
    return n * (n + 1) // 2


class BlockStructure:
    """Cone layout: ordered list of ('psd', n) and ('nn', m) blocks."""

    def __init__(self, specs):
        self.specs = []
        for kind, size in specs:
            if kind not in ("psd", "nn"):
                raise ValueError("unknown block kind %r" % kind)
            if size < 1:
                raise ValueError("block size must be positive")
            self.specs.append((kind, int(size)))
        self.dims = [svec_dim(n) if kind == "psd" else n
                     for kind, n in self.specs]
        self.offsets = np.concatenate([[0], np.cumsum(self.dims)]).astype(int)
        self.total_dim = int(self.offsets[-1])
        self._triu = {n: np.triu_indices(n)
                      for kind, n in self.specs if kind == "psd"}

    def __len__(self):
        return len(self.specs)

    def barrier_degree(self):
        return sum(n for _, n in self.specs)

    def slices(self):
        return [slice(self.offsets[b], self.offsets[b + 1])
                for b in range(len(self.specs))]

    def identity_svec(self):
        out = np.zeros(self.total_dim)
        for b, (kind, n) in enumerate(self.specs):
            sl = slice(self.offsets[b], self.offsets[b + 1])
            if kind == "psd":
                out[sl] = svec(np.eye(n))
            else:
                out[sl] = 1.0
        return out

    def split(self, vec):
        return [vec[self.offsets[b]:self.offsets[b + 1]]
                for b in range(len(self.specs))]

    def matrices(self, vec):
        """Per-block view: psd blocks as symmetric matrices, nn as vectors."""
        out = []
        for b, (kind, n) in enumerate(self.specs):
            piece = vec[self.offsets[b]:self.offsets[b + 1]]
            out.append(smat(piece, n) if kind == "psd" else piece.copy())
        return out

    def min_eigenvalue(self, vec):
        """Smallest eigenvalue over all blocks of the cone element."""
        worst = np.inf
        for block in self.matrices(vec):
            if block.ndim == 2:
                worst = min(worst, float(np.linalg.eigvalsh(block).min()))
            elif block.size:
                worst = min(worst, float(block.min()))
        return worst if np.isfinite(worst) else 0.0


class SdpProblem:
    """A conic program in the solver-native shape (see module docstring).

    F is a scipy CSR matrix mapping the free vector w into the stacked
    svec cone space; E and f hold the equality rows, already preprocessed
    to full row rank.
    """

    def __init__(self, blocks, c, E, f, F, block_names=None):
        self.blocks = blocks
        self.c = np.asarray(c, dtype=float)
        self.E = np.asarray(E, dtype=float)
        self.f = np.asarray(f, dtype=float)
        self.F = scipy.sparse.csr_matrix(F)
        self.block_names = block_names or ["block%d" % b
                                           for b in range(len(blocks))]
        n_w = self.c.size
        if self.E.shape != (self.f.size, n_w):
            raise ValueError("equality data has inconsistent shape")
        if self.F.shape != (blocks.total_dim, n_w):
            raise ValueError("cone map has inconsistent shape")

    @property
    def n_w(self):
        return self.c.size

    @property
    def m_eq(self):
        return self.f.size

    @classmethod
    def from_standard(cls, block_specs, C_blocks, equalities, block_names=None):
        """Embed min sum <C_b, X_b> s.t. sum_b <A_{i,b}, X_b> = b_i, X_b in cone.

        C_blocks and each equality's A-part are lists over blocks (None for
        a block the term does not touch; psd entries are symmetric matrices,
        nn entries vectors).
        """
        blocks = BlockStructure(block_specs)
        n_w = blocks.total_dim

        def embed(parts):
            out = np.zeros(n_w)
            for b, part in enumerate(parts):
                if part is None:
                    continue
                kind, n = blocks.specs[b]
                sl = slice(blocks.offsets[b], blocks.offsets[b + 1])
                if kind == "psd":
                    part = np.asarray(part, dtype=float)
                    if np.max(np.abs(part - part.T)) > 1e-12:
                        raise ValueError("constraint matrices must be symmetric")
                    out[sl] = svec(part)
                else:
                    out[sl] = np.asarray(part, dtype=float)
            return out

        c = embed(C_blocks)
        E = np.zeros((len(equalities), n_w))
        f = np.zeros(len(equalities))
        for i, (parts, rhs) in enumerate(equalities):
            E[i] = embed(parts)
            f[i] = rhs
        F = scipy.sparse.identity(n_w, format="csr")
        return cls(blocks, c, E, f, F, block_names=block_names)

    def equality_min_singular_value(self):
        if self.m_eq == 0:
            return np.inf
        sv = np.linalg.svd(self.E, compute_uv=False)
        return float(sv[-1])


class SdpOutcome:
    """Solver result.  Interpretation by status:

    Optimal        x/y/z/s hold the de-homogenized primal-dual solution.
    PrimalInfeasible  ray_y (normalized) and ray_z certify via
                      E'ray_y ~ F'ray_z, ray_z in K, f'ray_y < 0.
    DualInfeasible    ray_x certifies via E ray_x ~ 0, F ray_x in K,
                      c'ray_x < 0.
    Inaccurate / IterationLimit  best de-homogenized iterate attached.
    """

    def __init__(self, status, x=None, y=None, s=None, z=None,
                 primal_objective=None, dual_objective=None,
                 residuals=None, iterations=0, tau=None, kappa=None,
                 ray_y=None, ray_z=None, ray_x=None, message=""):
        self.status = status
        self.x = x
        self.y = y
        self.s = s
        self.z = z
        self.primal_objective = primal_objective
        self.dual_objective = dual_objective
        self.residuals = residuals or {}
        self.iterations = iterations
        self.tau = tau
        self.kappa = kappa
        self.ray_y = ray_y
        self.ray_z = ray_z
        self.ray_x = ray_x
        self.message = message

    def __repr__(self):
        return "SdpOutcome(status=%s, iterations=%d)" % (
            self.status, self.iterations)

    def primal_block_matrices(self, problem):
        """Per-block primal cone element (psd blocks as matrices)."""
        return problem.blocks.matrices(self.s)


def verify_primal_infeasibility(problem, ray_y, ray_z, psd_tol=1e-7,
                                neg_tol=1e-8):
    """Check a Farkas-type improving ray for the dual.

    Valid when E'y + F'z vanishes (relative to the ray scale), every cone
    block of z has min eigenvalue >= -psd_tol, and f'y < -neg_tol * |y|.
    """
    ray_y = np.asarray(ray_y, dtype=float)
    ray_z = np.asarray(ray_z, dtype=float)
    scale = np.linalg.norm(ray_y)
    if scale == 0:
        return {"valid": False, "identity_residual": np.inf,
                "min_block_eig": -np.inf, "objective": 0.0}
    identity = problem.E.T @ ray_y - problem.F.T @ ray_z
    res = float(np.linalg.norm(identity) / scale)
    min_eig = problem.blocks.min_eigenvalue(ray_z) / scale
    fy = float(problem.f @ ray_y)
    valid = (res <= psd_tol and min_eig >= -psd_tol
             and fy < -neg_tol * scale)
    return {"valid": bool(valid), "identity_residual": res,
            "min_block_eig": float(min_eig), "objective": fy}


def verify_dual_infeasibility(problem, ray_x, psd_tol=1e-7, neg_tol=1e-8):
    """Check an improving ray for the primal: E x ~ 0, F x in K, c'x < 0."""
    ray_x = np.asarray(ray_x, dtype=float)
    scale = np.linalg.norm(ray_x)
    if scale == 0:
        return {"valid": False, "equality_residual": np.inf,
                "min_block_eig": -np.inf, "objective": 0.0}
    eq_res = float(np.linalg.norm(problem.E @ ray_x) / scale) \
        if problem.m_eq else 0.0
    cone_vec = problem.F @ ray_x
    min_eig = problem.blocks.min_eigenvalue(cone_vec) / scale
    cx = float(problem.c @ ray_x)
    valid = (eq_res <= psd_tol and min_eig >= -psd_tol
             and cx < -neg_tol * scale)
    return {"valid": bool(valid), "equality_residual": eq_res,
            "min_block_eig": float(min_eig), "objective": cx}
