"""Primal-dual interior-point solver on the homogeneous self-dual embedding.

The embedding couples the native problem (see problem.py) with its dual
through two homogenizing scalars tau, kappa >= 0:

    E x - f tau           = 0
    F x - s               = 0
    -E'y - F'z + c tau    = 0
    f'y - c'x - kappa     = 0
    s, z in K,  s'z + tau kappa -> 0.

A solution with tau > 0 de-homogenizes to a primal-dual optimal pair;
tau -> 0 with kappa > 0 exposes an infeasibility ray.  Directions are
Mehrotra predictor-corrector steps under Nesterov-Todd scaling; each
iteration factors one Schur complement H = F'(Tinv x Tinv)F and reuses
it for the predictor, the corrector, and the shared objective solve.
"""

import numpy as np
import scipy.linalg

from . import kernels
from .problem import (SdpOutcome, smat, svec, verify_dual_infeasibility,
                      verify_primal_infeasibility)

STATUS_OPTIMAL = "Optimal"
STATUS_PRIMAL_INFEASIBLE = "PrimalInfeasible"
STATUS_DUAL_INFEASIBLE = "DualInfeasible"
STATUS_INACCURATE = "Inaccurate"
STATUS_ITERATION_LIMIT = "IterationLimit"

INFEAS_RATIO = 1e6


class _Breakdown(Exception):
    pass


def _measure_point(problem, norm_c, norm_f, x, y, s, z):
    """Residuals and objectives of a de-homogenized primal-dual point.

    Cone distances count toward the feasibility residuals, so a candidate
    whose s or z strays outside K scores accordingly and a reported
    Optimal status certifies cone membership to the same tolerance.
    """
    c, E, f, F = problem.c, problem.E, problem.f, problem.F
    r_E = E @ x - f if problem.m_eq else np.zeros(0)
    r_F = F @ x - s
    r_c = c - F.T @ z
    if problem.m_eq:
        r_c -= E.T @ y
    s_dist = max(0.0, -problem.blocks.min_eigenvalue(s))
    z_dist = max(0.0, -problem.blocks.min_eigenvalue(z))
    pres = max(np.linalg.norm(r_E) / norm_f,
               (np.linalg.norm(r_F) + s_dist) / (1.0 + np.linalg.norm(s)))
    dres = max(np.linalg.norm(r_c) / norm_c,
               z_dist / (1.0 + np.linalg.norm(z)))
    pobj = float(c @ x)
    dobj = float(f @ y)
    gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    return pres, dres, gap, pobj, dobj


def _comp_residual(blocks, s, z):
    """Symmetrized complementarity residual svec(sym(Z S)) per block."""
    r = np.empty(blocks.total_dim)
    for b, (kind, n) in enumerate(blocks.specs):
        sl = slice(blocks.offsets[b], blocks.offsets[b + 1])
        if kind == "psd":
            P = smat(z[sl], n) @ smat(s[sl], n)
            r[sl] = svec(0.5 * (P + P.T))
        else:
            r[sl] = s[sl] * z[sl]
    return r


def _lmul_sym_op(M):
    """Matrix of U -> svec(sym(M U)) acting on svec coordinates."""
    n = M.shape[0]
    d = n * (n + 1) // 2
    out = np.empty((d, d))
    basis = np.zeros(d)
    for k in range(d):
        basis[k] = 1.0
        P = M @ smat(basis, n)
        out[:, k] = svec(0.5 * (P + P.T))
        basis[k] = 0.0
    return out


def _newton_refine(problem, x, y, z, steps=2, cond=None):
    """Newton steps on the full KKT system with exact complementarity.

    Interior-point iterates satisfy trace complementarity to O(mu) but the
    matrix product Z S only to O(sqrt(mu)), which caps solution accuracy.
    For a nondegenerate optimum a couple of Newton steps on
    (E x - f, c - E'y - F'z, sym(Z S)) square that error away.

    With cond set, the step is the truncated least-squares solution at
    that cutoff instead: near a degenerate face the Jacobian is close to
    singular and the plain solve walks far along its near-null space,
    while the truncated step stays small and still removes the residual
    components that are actually reachable.
    """
    blocks = problem.blocks
    c, E, f = problem.c, problem.E, problem.f
    F = problem.F.toarray()
    n_w, m, D = problem.n_w, problem.m_eq, blocks.total_dim
    x, y, z = x.copy(), y.copy(), z.copy()
    for _ in range(steps):
        s = F @ x
        r = np.concatenate([
            E @ x - f, c - E.T @ y - F.T @ z, _comp_residual(blocks, s, z)])
        comp_x = np.empty((D, n_w))
        comp_z = np.zeros((D, D))
        for b, (kind, n) in enumerate(blocks.specs):
            sl = slice(blocks.offsets[b], blocks.offsets[b + 1])
            if kind == "psd":
                comp_x[sl] = _lmul_sym_op(smat(z[sl], n)) @ F[sl]
                comp_z[sl, sl] = _lmul_sym_op(smat(s[sl], n))
            else:
                comp_x[sl] = z[sl, None] * F[sl]
                comp_z[sl, sl] = np.diag(s[sl])
        J = np.zeros((m + n_w + D, n_w + m + D))
        J[:m, :n_w] = E
        J[m:m + n_w, n_w:n_w + m] = -E.T
        J[m:m + n_w, n_w + m:] = -F.T
        J[m + n_w:, :n_w] = comp_x
        J[m + n_w:, n_w + m:] = comp_z
        try:
            if cond is None:
                delta = np.linalg.solve(J, -r)
            else:
                delta = scipy.linalg.lstsq(J, -r, cond=cond,
                                           lapack_driver="gelsy")[0]
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            break
        x += delta[:n_w]
        y += delta[n_w:n_w + m]
        z += delta[n_w + m:]
    return x, y, problem.F @ x, z


def _polish_point(problem, x, y, s, z):
    """Least-squares correction of the free variables x and y.

    The cone variables s, z are left untouched, so feasibility with
    respect to K is preserved exactly; only the linear residuals move.
    """
    c, E, f, F = problem.c, problem.E, problem.f, problem.F
    x2, y2 = x, y
    try:
        if problem.m_eq:
            r_c = c - E.T @ y - F.T @ z
            dy = scipy.linalg.solve(E @ E.T, E @ r_c, assume_a="pos")
            y2 = y + dy
        M = (F.T @ F).toarray()
        rhs = F.T @ (s - F @ x)
        if problem.m_eq:
            M += E.T @ E
            rhs += E.T @ (f - E @ x)
        dx = scipy.linalg.cho_solve((_chol(M), True), rhs)
        x2 = x + dx
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, _Breakdown):
        pass
    return x2, y2


def _dual_fit(problem, y, z):
    """Min-norm correction of (y, z) onto the dual equality, with z then
    clipped back to the cone blockwise.

    Used when the full Newton step is rejected: a degenerate dual face
    makes the KKT system near-singular in the z directions, but the
    smallest correction landing on c = E'y + F'z stays near the iterate
    and only grazes the cone boundary.
    """
    E, F = problem.E, problem.F
    r_c = problem.c - F.T @ z
    if problem.m_eq:
        r_c = r_c - E.T @ y
        A = np.hstack([E.T, F.T.toarray()])
    else:
        A = F.T.toarray()
    try:
        delta, *_ = np.linalg.lstsq(A, r_c, rcond=None)
    except np.linalg.LinAlgError:
        return y, z
    m = problem.m_eq
    y2 = y + delta[:m] if m else y
    z2 = z + delta[m:]
    blocks = problem.blocks
    for (kind, n), sl in zip(blocks.specs, blocks.slices()):
        if kind == "psd":
            lam, Q = np.linalg.eigh(smat(z2[sl], n))
            if lam[0] < 0.0:
                z2[sl] = svec((Q * np.maximum(lam, 0.0)) @ Q.T)
        else:
            np.maximum(z2[sl], 0.0, out=z2[sl])
    return y2, z2


def _chol(M):
    """Cholesky factor with escalating diagonal regularization."""
    n = M.shape[0]
    base = 1e-12 * (np.trace(M) / max(n, 1) + 1.0)
    reg = 0.0
    for _ in range(4):
        try:
            if reg:
                return np.linalg.cholesky(M + reg * np.eye(n))
            return np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            reg = base if reg == 0.0 else reg * 100.0
    raise _Breakdown("cholesky failed after regularization")


class _PsdScaling:
    """Nesterov-Todd scaling of one psd block: T z T = s with T = R R'."""

    def __init__(self, S, Z):
        try:
            Ls = np.linalg.cholesky(S)
            Lz = np.linalg.cholesky(Z)
        except np.linalg.LinAlgError:
            raise _Breakdown("cone iterate lost definiteness")
        U, lam, Vt = np.linalg.svd(Lz.T @ Ls)
        if lam[-1] <= 0:
            raise _Breakdown("degenerate scaling")
        sqrt_lam = np.sqrt(lam)
        self.lam = lam
        self.R = (Ls @ Vt.T) / sqrt_lam
        self.Rinv = (U / sqrt_lam).T @ Lz.T
        self.Tinv = self.Rinv.T @ self.Rinv


class _NnScaling:
    def __init__(self, s, z):
        if np.any(s <= 0) or np.any(z <= 0):
            raise _Breakdown("cone iterate lost positivity")
        self.lam = np.sqrt(s * z)
        self.w = z / s


def _apply_q(blocks, scalings, vec):
    """Apply the scaled inverse (Tinv x Tinv) blockwise to an svec vector."""
    out = np.empty_like(vec)
    for b, (kind, n) in enumerate(blocks.specs):
        sl = slice(blocks.offsets[b], blocks.offsets[b + 1])
        sc = scalings[b]
        if kind == "psd":
            out[sl] = svec(sc.Tinv @ smat(vec[sl], n) @ sc.Tinv)
        else:
            out[sl] = vec[sl] * sc.w
    return out


def _max_step(blocks, scalings, s, z, ds, dz, tau, dtau, kappa, dkappa):
    """Largest step keeping (s, z, tau, kappa) inside the cone."""
    bound = np.inf
    for b, (kind, n) in enumerate(blocks.specs):
        sl = slice(blocks.offsets[b], blocks.offsets[b + 1])
        sc = scalings[b]
        if kind == "psd":
            rl = np.sqrt(sc.lam)
            P = sc.Rinv @ smat(ds[sl], n) @ sc.Rinv.T
            P = (P + P.T) / (2.0 * np.outer(rl, rl))
            m = np.linalg.eigvalsh(P)[0]
            if m < 0:
                bound = min(bound, -1.0 / m)
            P = sc.R.T @ smat(dz[sl], n) @ sc.R
            P = (P + P.T) / (2.0 * np.outer(rl, rl))
            m = np.linalg.eigvalsh(P)[0]
            if m < 0:
                bound = min(bound, -1.0 / m)
        else:
            for cur, dlt in ((s[sl], ds[sl]), (z[sl], dz[sl])):
                neg = dlt < 0
                if np.any(neg):
                    bound = min(bound, float(np.min(-cur[neg] / dlt[neg])))
    if dtau < 0:
        bound = min(bound, -tau / dtau)
    if dkappa < 0:
        bound = min(bound, -kappa / dkappa)
    return bound


def solve(problem, tol=1e-8, max_iter=200, verbose=False, kernel_backend=None,
          collect_trace=False):
    """Run the interior-point iteration; always returns an SdpOutcome."""
    blocks = problem.blocks
    c, E, f, F = problem.c, problem.E, problem.f, problem.F
    n_w, m_eq = problem.n_w, problem.m_eq
    nu = blocks.barrier_degree()
    kdata = kernels.KernelData(problem)

    # equilibrate equality rows so row rescaling of the input is neutral
    if m_eq:
        row_scale = np.linalg.norm(E, axis=1)
        row_scale[row_scale == 0.0] = 1.0
        E = E / row_scale[:, None]
        f = f / row_scale
    else:
        row_scale = np.ones(0)

    x = np.zeros(n_w)
    y = np.zeros(m_eq)
    s = blocks.identity_svec()
    z = s.copy()
    tau, kappa = 1.0, 1.0

    norm_c = 1.0 + np.linalg.norm(c)
    norm_f = 1.0 + np.linalg.norm(f)
    norm_f_out = 1.0 + np.linalg.norm(problem.f)

    pres = dres = gap = np.inf
    pobj = dobj = np.nan
    mu = 1.0
    stalls = 0
    message = ""
    it = 0
    best_score = np.inf
    best = None
    since_best = 0
    trace = [] if collect_trace else None

    def finish(final_status, extra=None, use_best=False):
        if use_best and best is not None:
            px, py, ps, pz, ptau = best
        else:
            scale = tau if tau > 1e-14 else 1.0
            px, py, ps, pz = x / scale, y / scale, s / scale, z / scale
            ptau = tau
        py = py / row_scale
        if extra is None:
            # polish the free variables, keep the better point, and let the
            # measured residuals of what is actually returned decide between
            # Optimal and Inaccurate
            qx, qy = _polish_point(problem, px, py, ps, pz)
            cands = []
            for ux, uy in ((px, py), (qx, py), (px, qy), (qx, qy)):
                v = _measure_point(problem, norm_c, norm_f_out, ux, uy, ps, pz)
                cands.append((max(v[:3]), v, ux, uy))
            best_cand, vals, px, py = min(cands, key=lambda t: t[0])
            def consider(ux, uy, us, uz):
                nonlocal best_cand, vals, px, py, ps, pz
                v = _measure_point(problem, norm_c, norm_f_out,
                                   ux, uy, us, uz)
                if max(v[:3]) < best_cand:
                    best_cand, vals = max(v[:3]), v
                    px, py, ps, pz = ux, uy, us, uz

            kkt_dim = n_w + m_eq + blocks.total_dim
            if kkt_dim <= 1200 or (kkt_dim <= 6000 and best_cand > tol):
                rx, ry, rs, rz = _newton_refine(problem, px, py, pz)
                consider(rx, ry, rs, rz)
                if best_cand > tol:
                    # degenerate dual face: keep the Newton primal, refit
                    # the multipliers by the smallest feasible correction
                    ny, nz = _dual_fit(problem, py, pz)
                    consider(rx, ny, problem.F @ rx, nz)
                if best_cand > tol:
                    # degenerate on both sides: truncated Newton step,
                    # multipliers refit from its dual estimate
                    lx, ly, ls, lz = _newton_refine(problem, px, py, pz,
                                                    steps=1, cond=1e-8)
                    consider(lx, ly, ls, lz)
                    if best_cand > tol:
                        ny, nz = _dual_fit(problem, ly, lz)
                        consider(lx, ny, problem.F @ lx, nz)
            fpres, fdres, fgap, fpobj, fdobj = vals
            if max(fpres, fdres, fgap) <= tol:
                final_status = STATUS_OPTIMAL
            elif final_status == STATUS_OPTIMAL:
                final_status = STATUS_INACCURATE
            res = {"primal": fpres, "dual": fdres, "gap": fgap,
                   "mu": float(ps @ pz) / (nu + 1)}
            out = SdpOutcome(
                final_status, x=px, y=py, s=ps, z=pz,
                primal_objective=fpobj, dual_objective=fdobj,
                residuals=res, iterations=it, tau=ptau, kappa=kappa,
                message=message)
        else:
            res = {"primal": pres, "dual": dres, "gap": gap, "mu": mu}
            out = SdpOutcome(
                final_status, x=px, y=py, s=ps, z=pz,
                primal_objective=pobj, dual_objective=dobj,
                residuals=res, iterations=it, tau=ptau, kappa=kappa,
                message=message)
            for key, val in extra.items():
                setattr(out, key, val)
        out.trace = trace
        return out

    for it in range(max_iter):
        r_E = E @ x - f * tau if m_eq else np.zeros(0)
        r_F = F @ x - s
        r_c = c * tau - F.T @ z
        if m_eq:
            r_c -= E.T @ y
        r_g = float(f @ y - c @ x - kappa)
        mu = (s @ z + tau * kappa) / (nu + 1)

        if tau > 1e-14:
            st_norm = np.linalg.norm(s) / tau
            pres = max(np.linalg.norm(r_E) / (tau * norm_f),
                       np.linalg.norm(r_F) / (tau * (1.0 + st_norm)))
            dres = np.linalg.norm(r_c) / (tau * norm_c)
            pobj = float(c @ x) / tau
            dobj = float(f @ y) / tau
            gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        else:
            pres = dres = gap = np.inf

        if verbose:
            print("iter %3d  pobj % .6e  dobj % .6e  gap %.2e  "
                  "pres %.2e  dres %.2e  mu %.2e  tau %.2e" %
                  (it, pobj, dobj, gap, pres, dres, mu, tau))
        if collect_trace:
            trace.append({"iteration": it, "primal_objective": pobj,
                          "dual_objective": dobj, "primal_residual": pres,
                          "dual_residual": dres, "gap": gap, "mu": mu,
                          "tau": tau, "kappa": kappa,
                          "gap_slack": (abs(r_g) + kappa) / max(tau, 1e-300)})

        if pres <= tol and dres <= tol and gap <= tol:
            return finish(STATUS_OPTIMAL)

        score = max(pres, dres, gap)
        if np.isfinite(score):
            if score < 0.9 * best_score:
                best_score = score
                best = (x / tau, y / tau, s / tau, z / tau, tau)
                since_best = 0
            else:
                since_best += 1
        if (since_best >= 10 and best is not None and best_score < 1e-4
                and kappa <= INFEAS_RATIO * tau):
            message = "progress stalled near tolerance"
            return finish(STATUS_INACCURATE, use_best=True)

        if kappa > INFEAS_RATIO * tau:
            fy = float(f @ y)
            if fy > 0:
                yo = y / row_scale
                cert = verify_primal_infeasibility(problem, -yo, z)
                if cert["valid"]:
                    scale = np.linalg.norm(yo)
                    message = "dual improving ray found"
                    return finish(STATUS_PRIMAL_INFEASIBLE, extra={
                        "ray_y": -yo / scale, "ray_z": z / scale})
            cx = float(c @ x)
            if cx < 0:
                cert = verify_dual_infeasibility(problem, x)
                if cert["valid"]:
                    message = "primal improving ray found"
                    return finish(STATUS_DUAL_INFEASIBLE, extra={
                        "ray_x": x / np.linalg.norm(x)})

        if mu < 1e-16 or tau < 1e-12:
            message = "iterate reached numerical floor"
            return finish(STATUS_INACCURATE, use_best=True)

        try:
            scalings = []
            for b, (kind, n) in enumerate(blocks.specs):
                sl = slice(blocks.offsets[b], blocks.offsets[b + 1])
                if kind == "psd":
                    scalings.append(_PsdScaling(smat(s[sl], n),
                                                smat(z[sl], n)))
                else:
                    scalings.append(_NnScaling(s[sl], z[sl]))
            scaling_arrays = [sc.Tinv if isinstance(sc, _PsdScaling) else sc.w
                              for sc in scalings]
            H = kernels.build_h(kdata, scaling_arrays,
                                backend=kernel_backend)
            L = _chol(H)
            if m_eq:
                W = scipy.linalg.solve_triangular(L, E.T, lower=True)
                L_SE = _chol(W.T @ W)
        except _Breakdown as exc:
            message = str(exc)
            return finish(STATUS_INACCURATE, use_best=True)

        def raw_solve(g_c, g_E):
            hg = scipy.linalg.cho_solve((L, True), g_c)
            if m_eq:
                dy = scipy.linalg.cho_solve((L_SE, True), g_E - E @ hg)
                dx = hg + scipy.linalg.cho_solve((L, True), E.T @ dy)
            else:
                dy = np.zeros(0)
                dx = hg
            return dx, dy

        def core_solve(g_c, g_E):
            # one pass of iterative refinement on the saddle system
            dx, dy = raw_solve(g_c, g_E)
            res_c = g_c - (H @ dx)
            if m_eq:
                res_c += E.T @ dy
                res_E = g_E - E @ dx
            else:
                res_E = np.zeros(0)
            cx, cy = raw_solve(res_c, res_E)
            return dx + cx, dy + cy

        dx2, dy2 = core_solve(-c, f)
        denom = float(f @ dy2 - c @ dx2) + kappa / tau

        def directions(eta, d, e):
            g_c1 = -eta * r_c + F.T @ _apply_q(blocks, scalings,
                                               d - eta * r_F)
            dx1, dy1 = core_solve(g_c1, -eta * r_E)
            dtau = (e / tau - float(f @ dy1 - c @ dx1 + eta * r_g)) / denom
            dx = dx1 + dtau * dx2
            dy = dy1 + dtau * dy2
            ds = F @ dx + eta * r_F
            dz = _apply_q(blocks, scalings, d - ds)
            dkappa = (e - kappa * dtau) / tau
            return dx, dy, ds, dz, dtau, dkappa

        # predictor
        dxa, dya, dsa, dza, dtaua, dkappaa = directions(1.0, -s, -tau * kappa)
        alpha_aff = min(1.0, 0.9995 * _max_step(
            blocks, scalings, s, z, dsa, dza, tau, dtaua, kappa, dkappaa))
        mu_aff = ((s + alpha_aff * dsa) @ (z + alpha_aff * dza)
                  + (tau + alpha_aff * dtaua) * (kappa + alpha_aff * dkappaa)
                  ) / (nu + 1)
        sigma = min(1.0, max(0.0, (max(mu_aff, 0.0) / mu) ** 3))

        # corrector target
        d = np.empty_like(s)
        for b, (kind, n) in enumerate(blocks.specs):
            sl = slice(blocks.offsets[b], blocks.offsets[b + 1])
            sc = scalings[b]
            if kind == "psd":
                ds_t = sc.Rinv @ smat(dsa[sl], n) @ sc.Rinv.T
                dz_t = sc.R.T @ smat(dza[sl], n) @ sc.R
                prod = ds_t @ dz_t
                rhs = (sigma * mu * np.eye(n) - np.diag(sc.lam ** 2)
                       - 0.5 * (prod + prod.T))
                D = 2.0 * rhs / np.add.outer(sc.lam, sc.lam)
                d[sl] = svec(sc.R @ D @ sc.R.T)
            else:
                d[sl] = (sigma * mu - s[sl] * z[sl] - dsa[sl] * dza[sl]) / z[sl]
        e = sigma * mu - tau * kappa - dtaua * dkappaa

        eta = 1.0 - sigma
        dx, dy, ds, dz, dtau, dkappa = directions(eta, d, e)
        alpha = min(1.0, 0.99 * _max_step(
            blocks, scalings, s, z, ds, dz, tau, dtau, kappa, dkappa))

        if alpha < 1e-7:
            stalls += 1
            if stalls >= 3:
                message = "step length collapsed"
                return finish(STATUS_INACCURATE, use_best=True)
        else:
            stalls = 0

        x += alpha * dx
        if m_eq:
            y += alpha * dy
        s += alpha * ds
        z += alpha * dz
        tau += alpha * dtau
        kappa += alpha * dkappa

    message = "iteration limit reached"
    return finish(STATUS_ITERATION_LIMIT, use_best=True)
