"""Brute-force baselines for the bi-sphere minimum.

These estimators validate certified results in the test suite; nothing in
the decision path depends on them.
"""

import numpy as np


def _tensor(form):
    return form.gram_matrix().reshape(form.p, form.q, form.p, form.q)


def grid_min_bisphere_2x2(form, resolution):
    """Minimum of B over the angle grid (cos t, sin t) x (cos s, sin s).

    Returns (value, error_bound); the bound covers the gap to the true
    minimum via the Lipschitz constant of B on the torus, which is at
    most twice the spectral norm of the Gram matrix per angle.
    """
    if (form.p, form.q) != (2, 2):
        raise ValueError("grid oracle requires p = q = 2")
    G4 = _tensor(form)
    theta = np.arange(0.0, 2.0 * np.pi, resolution)
    U = np.vstack([np.cos(theta), np.sin(theta)])
    V = U
    T1 = np.einsum("ijkl,ia,ka->ajl", G4, U, U)
    values = np.einsum("ajl,jb,lb->ab", T1, V, V)
    lipschitz = 2.0 * np.linalg.norm(form.gram_matrix(), 2)
    return float(values.min()), float(lipschitz * resolution)


def multistart_min_bisphere(form, starts=64, seed=0, iters=400):
    """Best value of projected-gradient descent from seeded random starts.

    The retraction renormalizes each block, so every visited point lies on
    the bi-sphere and the result is always an upper bound on b_min.
    """
    G4 = _tensor(form)
    p, q = form.p, form.q
    rng = np.random.default_rng(seed)

    def value(u, v):
        return float(np.einsum("ijkl,i,j,k,l->", G4, u, v, u, v))

    best = np.inf
    for _ in range(starts):
        u = rng.standard_normal(p)
        v = rng.standard_normal(q)
        u /= np.linalg.norm(u)
        v /= np.linalg.norm(v)
        f = value(u, v)
        step = 1.0
        for _ in range(iters):
            gu = 2.0 * np.einsum("ajkl,j,k,l->a", G4, v, u, v)
            gv = 2.0 * np.einsum("ibkl,i,k,l->b", G4, u, u, v)
            # project out the radial components
            gu -= (gu @ u) * u
            gv -= (gv @ v) * v
            gnorm = np.linalg.norm(np.concatenate([gu, gv]))
            if gnorm < 1e-12:
                break
            moved = False
            while step > 1e-14:
                u2 = u - step * gu
                v2 = v - step * gv
                u2 /= np.linalg.norm(u2)
                v2 /= np.linalg.norm(v2)
                f2 = value(u2, v2)
                if f2 < f - 1e-14:
                    u, v, f = u2, v2, f2
                    moved = True
                    step *= 1.5
                    break
                step *= 0.5
            if not moved:
                break
        best = min(best, f)
    return best
