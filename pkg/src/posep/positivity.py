"""Positivity of a bi-quadratic form over the product of unit spheres.

The global minimum b_min of B(x, y) on the bi-sphere is approached from
below by a hierarchy of moment relaxations.  Each order k solves a
semidefinite program over a truncated moment sequence constrained to the
vanishing ideal of the sphere and stationarity polynomials; a rank-stable
flat truncation certifies that the bound is attained and the support of
the recovered measure lists the global minimizers.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .extraction import ExtractionFailed, extract_atoms
from .forms import ones_poly, sphere_poly
from .moments import (Tms, cached_basis, cone_blocks, dedup_rows,
                      eliminate_dependent_rows, flatness_check,
                      ideal_equality_rows, stack_rows, tms_from_atoms)
from .sdp import STATUS_OPTIMAL, BlockStructure, SdpProblem, solve

STATUS_POSITIVE = "Positive"
STATUS_NOT_POSITIVE = "NotPositive"
STATUS_INCONCLUSIVE = "Inconclusive"

MIN_ORDER = 3


@dataclass
class PositivityReport:
    """Outcome of the positivity hierarchy for one form."""

    status: str
    b_min: float = None
    boundary: bool = False
    bound_sequence: list = field(default_factory=list)
    minimizers: list = field(default_factory=list)
    order_used: int = None
    flat_t: int = None
    moment_rank: int = None
    timings: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)


def kkt_polynomials(form):
    """Constraint polynomials of the first-order system on the bi-sphere.

    Returns (h, g): h holds both sphere equations and the scaled gradient
    stationarity polynomials, g the coordinate-sum functionals whose
    localizing matrices pin the sign convention of atoms.
    """
    n = form.p + form.q
    h = (sphere_poly(n, range(form.p)), sphere_poly(n, range(form.p, n)),
         *form.gradient_polynomials())
    g = (ones_poly(n, range(form.p)), ones_poly(n, range(form.p, n)))
    return h, g


def build_relaxation(form, k):
    """Order-k moment relaxation of min B on the bi-sphere as an SdpProblem.

    Variables are the truncated moment sequence over the degree-2k basis;
    equalities are the unit-mass row and the truncated ideal of the KKT
    polynomials, reduced to an independent subset.
    """
    if k < MIN_ORDER:
        raise ValueError("relaxation order must be at least %d" % MIN_ORDER)
    h, g = kkt_polynomials(form)
    basis = cached_basis(form.p, form.q, 2 * k)
    n_w = len(basis)
    ideal = []
    for poly in h:
        ideal.extend(ideal_equality_rows(poly, basis))
    rows = [{0: 1.0}] + dedup_rows(ideal)
    rhs = [1.0] + [0.0] * (len(rows) - 1)
    E, f = stack_rows(rows, rhs, n_w)
    E, f, _, _ = eliminate_dependent_rows(E, f)
    specs, F = cone_blocks(form.p, form.q, k, g)
    blocks = BlockStructure(specs)
    c = form.coefficient_vector(basis)
    return SdpProblem(blocks, c, E, f, F,
                      block_names=["moment"] + ["loc_sum_%d" % i
                                                for i in range(len(g))])


def _derivative_tables(form):
    """Gram tensor reshaped for gradient and Hessian contractions."""
    return form.gram_matrix().reshape(form.p, form.q, form.p, form.q)


def polish_atom(form, u, v, iters=20):
    """Newton refinement of a near-stationary point of B on the bi-sphere.

    Solves the stationarity system (grad_u B = 2 lam u, grad_v B = 2 mu v,
    |u| = |v| = 1) for (u, v, lam, mu) by damped least-squares Newton
    steps.  Returns the refined unit pair; a start the iteration cannot
    improve is returned unchanged.
    """
    G4 = _derivative_tables(form)
    p, q = form.p, form.q

    def residual(u, v, lam, mu):
        gu = 2.0 * np.einsum("ajkl,j,k,l->a", G4, v, u, v)
        gv = 2.0 * np.einsum("ibkl,i,k,l->b", G4, u, u, v)
        return np.concatenate([
            gu - 2.0 * lam * u, gv - 2.0 * mu * v,
            [u @ u - 1.0, v @ v - 1.0]])

    u = np.asarray(u, dtype=float).copy()
    v = np.asarray(v, dtype=float).copy()
    lam = mu = form.evaluate(u, v)
    r = residual(u, v, lam, mu)
    best = np.linalg.norm(r)
    for _ in range(iters):
        if best <= 1e-13:
            break
        H_uu = 2.0 * np.einsum("ajcl,j,l->ac", G4, v, v)
        H_vv = 2.0 * np.einsum("ibkd,i,k->bd", G4, u, u)
        H_uv = 2.0 * (np.einsum("abkl,k,l->ab", G4, u, v)
                      + np.einsum("ajkb,j,k->ab", G4, v, u))
        J = np.zeros((p + q + 2, p + q + 2))
        J[:p, :p] = H_uu - 2.0 * lam * np.eye(p)
        J[:p, p:p + q] = H_uv
        J[p:p + q, :p] = H_uv.T
        J[p:p + q, p:p + q] = H_vv - 2.0 * mu * np.eye(q)
        J[:p, p + q] = -2.0 * u
        J[p:p + q, p + q + 1] = -2.0 * v
        J[p + q, :p] = 2.0 * u
        J[p + q + 1, p:p + q] = 2.0 * v
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        alpha = 1.0
        for _ in range(6):
            u2 = u + alpha * step[:p]
            v2 = v + alpha * step[p:p + q]
            lam2 = lam + alpha * step[p + q]
            mu2 = mu + alpha * step[p + q + 1]
            r2 = residual(u2, v2, lam2, mu2)
            if np.linalg.norm(r2) < best:
                break
            alpha *= 0.5
        else:
            break
        u, v, lam, mu, r = u2, v2, lam2, mu2, r2
        best = np.linalg.norm(r)
    u = u / np.linalg.norm(u)
    v = v / np.linalg.norm(v)
    if u.sum() < 0:
        u = -u
    if v.sum() < 0:
        v = -v
    return u, v


def _atomic_rounding(form, w, k, dual_bound, rank_tol, seed):
    """Replace a noisy optimal moment vector by an exactly atomic one.

    Candidate atoms are extracted speculatively from the solved sequence,
    polished onto the stationarity system, deduplicated, and reassembled
    into a unit-mass measure.  The rounded sequence is kept only when its
    objective matches the solver's dual bound, which by weak duality
    certifies it as an optimal solution of the relaxation; otherwise the
    caller keeps the original sequence.
    """
    for t in range(2, k):
        try:
            measure = extract_atoms(w, t, rank_tol=rank_tol, seed=seed,
                                    require_stable_rank=False)
        except ExtractionFailed:
            continue
        atoms = []
        for c, u, v in measure.atoms:
            u2, v2 = polish_atom(form, u, v)
            for i, (ci, ui, vi) in enumerate(atoms):
                if (np.abs(ui - u2).max() < 1e-6
                        and np.abs(vi - v2).max() < 1e-6):
                    atoms[i] = (ci + c, ui, vi)
                    break
            else:
                atoms.append((c, u2, v2))
        total = sum(c for c, _, _ in atoms)
        if total <= 0:
            continue
        atoms = [(c / total, u, v) for c, u, v in atoms if c / total > 1e-10]
        if not atoms:
            continue
        value = sum(c * form.evaluate(u, v) for c, u, v in atoms)
        if abs(value - dual_bound) > 1e-6 * (1.0 + abs(dual_bound)):
            continue
        return tms_from_atoms(atoms, w.basis.degree_bound)

    # extraction found nothing usable (for instance a diffuse optimal
    # face); polish single-point candidates and keep one whose value
    # meets the dual bound, which certifies it as a minimizer
    gate = 1e-6 * (1.0 + abs(dual_bound))
    rng = np.random.default_rng(seed)
    candidates = []
    mean_u = np.array([w.value(_unit_exponent(form.p + form.q, i))
                       for i in range(form.p)])
    mean_v = np.array([w.value(_unit_exponent(form.p + form.q, form.p + i))
                       for i in range(form.q)])
    if (np.linalg.norm(mean_u) > 1e-8 and np.linalg.norm(mean_v) > 1e-8):
        candidates.append((mean_u / np.linalg.norm(mean_u),
                           mean_v / np.linalg.norm(mean_v)))
    for _ in range(8):
        ru = rng.standard_normal(form.p)
        rv = rng.standard_normal(form.q)
        candidates.append((ru / np.linalg.norm(ru), rv / np.linalg.norm(rv)))
    for u0, v0 in candidates:
        u, v = polish_atom(form, u0, v0)
        if form.evaluate(u, v) <= dual_bound + gate:
            return tms_from_atoms([(1.0, u, v)], w.basis.degree_bound)
    return None


def _unit_exponent(nvars, i):
    e = [0] * nvars
    e[i] = 1
    return tuple(e)


def check_positivity(form, k_max=6, positivity_tol=1e-6, seed=0,
                     rank_tol=1e-6, psd_tol=1e-7, eq_tol=1e-6,
                     solver_tol=1e-8, kernel_backend=None):
    """Decide positivity of the form by the moment hierarchy.

    Orders k = 3 .. k_max are solved in turn; at each solved order the
    moment sequence is scanned for an outer flat truncation, and on
    success the minimizers are extracted and the certified b_min decides
    the status against positivity_tol.
    """
    h, g = kkt_polynomials(form)
    bound_sequence = []
    diagnostics = []
    timings = {}
    for k in range(MIN_ORDER, k_max + 1):
        problem = build_relaxation(form, k)
        start = time.perf_counter()
        out = solve(problem, tol=solver_tol, kernel_backend=kernel_backend)
        timings["order_%d" % k] = time.perf_counter() - start
        if out.status != STATUS_OPTIMAL:
            diagnostics.append((k, out.status, out.message))
            continue
        bound_sequence.append((k, out.primal_objective))
        w = Tms(cached_basis(form.p, form.q, 2 * k), out.x)
        rounded = _atomic_rounding(form, w, k, out.dual_objective,
                                   rank_tol, seed)
        if rounded is not None:
            w = rounded
        for t in range(2, k):
            report = flatness_check(w, t, h, g, "outer",
                                    rank_tol=rank_tol, psd_tol=psd_tol,
                                    eq_tol=eq_tol)
            if not report.is_flat:
                continue
            try:
                measure = extract_atoms(w, t + 1, rank_tol=rank_tol,
                                        seed=seed)
            except ExtractionFailed as exc:
                diagnostics.append((k, "extraction at t=%d" % t, str(exc)))
                continue
            b_min = float(problem.c @ w.values)
            minimizers = [(u, v, form.evaluate(u, v))
                          for _, u, v in measure.atoms]
            positive = b_min >= -positivity_tol
            return PositivityReport(
                status=STATUS_POSITIVE if positive else STATUS_NOT_POSITIVE,
                b_min=b_min,
                boundary=positive and abs(b_min) <= positivity_tol,
                bound_sequence=bound_sequence,
                minimizers=minimizers,
                order_used=k,
                flat_t=t,
                moment_rank=report.rank_low,
                timings=timings,
                diagnostics=diagnostics)
    return PositivityReport(status=STATUS_INCONCLUSIVE,
                            bound_sequence=bound_sequence,
                            timings=timings,
                            diagnostics=diagnostics)
