"""Bi-quadratic forms, Kronecker-subspace matrices, and atomic measures.

A bi-quadratic form B(x, y) = sum b_{ijkl} x_i y_j x_k y_l is stored by its
monomial coefficients over the canonical index set

    Omega = {(i, j, k, l) : 0 <= i <= k < p, 0 <= j <= l < q}

(0-based internally; constructors that accept user data take 1-based
indices).  A matrix A in the Kronecker subspace carries the same Omega data
through A[pi(i,j), pi(k,l)] = a_{ijkl} with pi(i,j) = i*q + j.

Polynomials elsewhere in the package are plain dicts mapping exponent
tuples (length p+q, x-variables first) to float coefficients; the small
helpers for those live here too.
"""

import numpy as np


# ---------------------------------------------------------------------------
# polynomial dict helpers

def poly_add(a, b):
    out = dict(a)
    for e, c in b.items():
        out[e] = out.get(e, 0.0) + c
    return {e: c for e, c in out.items() if c != 0.0}


def poly_scale(a, s):
    return {e: s * c for e, c in a.items()}


def poly_mul(a, b):
    out = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0.0) + ca * cb
    return {e: c for e, c in out.items() if c != 0.0}


def poly_diff(a, var):
    out = {}
    for e, c in a.items():
        if e[var] == 0:
            continue
        d = list(e)
        d[var] -= 1
        out[tuple(d)] = out.get(tuple(d), 0.0) + c * e[var]
    return out


def poly_eval(a, point):
    point = np.asarray(point, dtype=float)
    total = 0.0
    for e, c in a.items():
        total += c * np.prod(point ** np.array(e))
    return total


def poly_degree(a):
    return max((sum(e) for e in a), default=0)


def monomial(nvars, var, power=1):
    e = [0] * nvars
    e[var] = power
    return tuple(e)


def sphere_poly(nvars, var_range):
    """x^T x - 1 restricted to the variables in var_range."""
    out = {tuple([0] * nvars): -1.0}
    for v in var_range:
        out[monomial(nvars, v, 2)] = 1.0
    return out


def ones_poly(nvars, var_range):
    """1^T x over the variables in var_range."""
    return {monomial(nvars, v): 1.0 for v in var_range}


# ---------------------------------------------------------------------------
# index bookkeeping

def omega_indices(p, q):
    """Canonical (i, j, k, l), 0-based, with i <= k and j <= l."""
    out = []
    for i in range(p):
        for k in range(i, p):
            for j in range(q):
                for l in range(j, q):
                    out.append((i, j, k, l))
    return out


def canonical_class(i, j, k, l):
    if i > k:
        i, k = k, i
    if j > l:
        j, l = l, j
    return (i, j, k, l)


def omega_exponents(p, q, idx):
    """Exponent tuple of x_i y_j x_k y_l in the joint p+q variable order."""
    i, j, k, l = idx
    e = [0] * (p + q)
    e[i] += 1
    e[k] += 1
    e[p + j] += 1
    e[p + l] += 1
    return tuple(e)


def pi_index(q, i, j):
    return i * q + j


# ---------------------------------------------------------------------------


class BiQuadraticForm:
    """Coefficients b_{ijkl} of B(x, y) = sum over Omega of b_{ijkl} x_i y_j x_k y_l."""

    def __init__(self, p, q, coeffs):
        self.p = p
        self.q = q
        omega = omega_indices(p, q)
        if set(coeffs) != set(omega):
            raise ValueError("coefficient map must cover the canonical index set exactly")
        self.coeffs = {idx: float(coeffs[idx]) for idx in omega}

    @classmethod
    def zero(cls, p, q):
        return cls(p, q, {idx: 0.0 for idx in omega_indices(p, q)})

    @classmethod
    def from_gram(cls, p, q, M):
        """Form with B(u, v) = z^T M z where z_{pi(i,j)} = u_i v_j."""
        M = np.asarray(M, dtype=float)
        if M.shape != (p * q, p * q):
            raise ValueError("Gram matrix must be %d x %d" % (p * q, p * q))
        if np.max(np.abs(M - M.T)) > 1e-12:
            raise ValueError("Gram matrix must be symmetric")
        coeffs = {idx: 0.0 for idx in omega_indices(p, q)}
        for a in range(p * q):
            i, j = divmod(a, q)
            for b in range(p * q):
                k, l = divmod(b, q)
                coeffs[canonical_class(i, j, k, l)] += M[a, b]
        return cls(p, q, coeffs)

    @classmethod
    def from_full_tensor(cls, p, q, f):
        """Form with B(u, v) = sum over all (i,j,k,l) of f[i,j,k,l] u_i v_j u_k v_l."""
        f = np.asarray(f, dtype=float)
        if f.shape != (p, q, p, q):
            raise ValueError("tensor must have shape (p, q, p, q)")
        coeffs = {idx: 0.0 for idx in omega_indices(p, q)}
        for i in range(p):
            for j in range(q):
                for k in range(p):
                    for l in range(q):
                        coeffs[canonical_class(i, j, k, l)] += f[i, j, k, l]
        return cls(p, q, coeffs)

    @classmethod
    def from_omega_entries(cls, p, q, entries):
        """Form from 1-based sparse entries [(i, j, k, l, value), ...].

        Each entry gives the monomial coefficient of x_i y_j x_k y_l;
        unlisted monomials are zero, repeated monomials accumulate.
        """
        coeffs = {idx: 0.0 for idx in omega_indices(p, q)}
        for (i, j, k, l, value) in entries:
            if not (1 <= i <= p and 1 <= k <= p and 1 <= j <= q and 1 <= l <= q):
                raise ValueError("index (%d,%d,%d,%d) out of range" % (i, j, k, l))
            coeffs[canonical_class(i - 1, j - 1, k - 1, l - 1)] += float(value)
        return cls(p, q, coeffs)

    def evaluate(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if u.shape != (self.p,) or v.shape != (self.q,):
            raise ValueError("point has wrong dimensions")
        total = 0.0
        for (i, j, k, l), c in self.coeffs.items():
            total += c * u[i] * u[k] * v[j] * v[l]
        return total

    def gram_matrix(self):
        """Symmetric M with B(u, v) = (u kron v)^T M (u kron v)."""
        q = self.q
        M = np.zeros((self.p * q, self.p * q))
        for (i, j, k, l), c in self.coeffs.items():
            pairs = {(pi_index(q, i, j), pi_index(q, k, l)),
                     (pi_index(q, i, l), pi_index(q, k, j))}
            share = c / (2.0 * len(pairs))
            for (a, b) in pairs:
                if a == b:
                    M[a, a] += 2.0 * share
                else:
                    M[a, b] += share
                    M[b, a] += share
        return M

    def as_polynomial(self):
        """The form as an exponent-dict polynomial in the p+q joint variables."""
        out = {}
        for idx, c in self.coeffs.items():
            if c == 0.0:
                continue
            e = omega_exponents(self.p, self.q, idx)
            out[e] = out.get(e, 0.0) + c
        return out

    def gradient_polynomials(self):
        """The p+q polynomials (grad_x B - 2*B*x, grad_y B - 2*B*y), degree <= 5."""
        n = self.p + self.q
        bpoly = self.as_polynomial()
        out = []
        for var in range(n):
            lin = {monomial(n, var): -2.0}
            out.append(poly_add(poly_diff(bpoly, var), poly_mul(bpoly, lin)))
        return out

    def coefficient_vector(self, basis):
        """Dense coefficients of the form over a joint monomial basis."""
        c = np.zeros(len(basis))
        for e, val in self.as_polynomial().items():
            c[basis.index_of(e)] = val
        return c


class KroneckerMatrix:
    """A pq x pq symmetric matrix with the partial symmetry of the
    Kronecker subspace: entries depend only on ({i,k}, {j,l})."""

    def __init__(self, p, q, mat, tol=1e-10):
        mat = np.asarray(mat, dtype=float)
        if mat.shape != (p * q, p * q):
            raise ValueError("matrix must be %d x %d" % (p * q, p * q))
        T = mat.reshape(p, q, p, q)
        sym = max(np.max(np.abs(T - T.transpose(2, 3, 0, 1))),
                  np.max(np.abs(T - T.transpose(2, 1, 0, 3))),
                  np.max(np.abs(T - T.transpose(0, 3, 2, 1))))
        if sym > tol:
            raise ValueError(
                "matrix violates the Kronecker partial symmetry by %.3e" % sym)
        self.p = p
        self.q = q
        self.mat = mat
        self._tensor = T

    @classmethod
    def from_omega(cls, p, q, a):
        """Matrix from its free entries {canonical (i,j,k,l): a_{ijkl}}, 0-based."""
        mat = np.zeros((p * q, p * q))
        for i in range(p):
            for j in range(q):
                for k in range(p):
                    for l in range(q):
                        mat[pi_index(q, i, j), pi_index(q, k, l)] = \
                            a[canonical_class(i, j, k, l)]
        return cls(p, q, mat)

    def entry(self, i, j, k, l):
        return self._tensor[i, j, k, l]

    def project_to_E(self):
        """The free entries a_{ijkl} over the canonical index set."""
        return {idx: float(self._tensor[idx]) for idx in omega_indices(self.p, self.q)}

    def frobenius(self):
        return float(np.linalg.norm(self.mat))


def kron_rank1(u, v):
    """(u u^T) kron (v v^T) as a KroneckerMatrix."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    mat = np.kron(np.outer(u, u), np.outer(v, v))
    return KroneckerMatrix(len(u), len(v), mat)


def pairing(form, kmat):
    """Omega-indexed dot product <A, B> = sum a_{ijkl} b_{ijkl}."""
    if (form.p, form.q) != (kmat.p, kmat.q):
        raise ValueError("dimension mismatch")
    a = kmat.project_to_E()
    return sum(form.coeffs[idx] * a[idx] for idx in form.coeffs)


class AtomicMeasure:
    """Finitely atomic measure sum_s c_s * delta_{(u_s, v_s)} with atoms on
    the bi-sphere and nonnegative coordinate sums."""

    def __init__(self, atoms, tol=1e-8):
        checked = []
        for (c, u, v) in atoms:
            u = np.asarray(u, dtype=float)
            v = np.asarray(v, dtype=float)
            if c <= 0:
                raise ValueError("atom weights must be positive")
            if abs(np.linalg.norm(u) - 1.0) > tol or abs(np.linalg.norm(v) - 1.0) > tol:
                raise ValueError("atom coordinates must be unit vectors")
            if np.sum(u) < -tol or np.sum(v) < -tol:
                raise ValueError("atom coordinate sums must be nonnegative")
            checked.append((float(c), u, v))
        self.atoms = checked

    def __len__(self):
        return len(self.atoms)

    def __iter__(self):
        return iter(self.atoms)

    def total_mass(self):
        return sum(c for c, _, _ in self.atoms)

    def to_kronecker(self):
        if not self.atoms:
            raise ValueError("empty measure has no matrix")
        p = len(self.atoms[0][1])
        q = len(self.atoms[0][2])
        mat = np.zeros((p * q, p * q))
        for c, u, v in self.atoms:
            mat += c * np.kron(np.outer(u, u), np.outer(v, v))
        return KroneckerMatrix(p, q, mat)
