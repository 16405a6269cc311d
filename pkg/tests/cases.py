"""Reference problem instances shared across the test suite.

Inputs are exact literals; expected values are frozen reference results
(4-digit displays carry the tolerance stated in each test that uses them).
"""

import numpy as np

from posep.forms import BiQuadraticForm, KroneckerMatrix

# --- positivity instances ---------------------------------------------------

# 4x4 Gram over (x1y1, x1y2, x2y1, x2y2); indefinite form.
GRAM_2X2 = np.array([
    [0.0058, -0.1894, -0.2736, 0.3415],
    [-0.1894, -0.1859, -0.1585, 0.0841],
    [-0.2736, -0.1585, -0.0693, -0.0669],
    [0.3415, 0.0841, -0.0669, 0.2494],
])
GRAM_2X2_BMIN = -0.3157
GRAM_2X2_MINIMIZER = (np.array([0.9830, -0.1835]), np.array([0.4632, 0.8863]))


def gram_2x2_form():
    return BiQuadraticForm.from_gram(2, 2, GRAM_2X2)


# Sparse monomial-coefficient instance on (2,2); positive but not SOS-obvious.
OMEGA_2X2_ENTRIES = [
    (1, 1, 1, 1, 1.0),
    (1, 1, 1, 2, 4.0),
    (1, 2, 1, 2, 12.0),
    (1, 1, 2, 1, 4.0),
    (1, 1, 2, 2, 16.0),
    (1, 2, 2, 2, 2.0),
    (2, 1, 2, 1, 12.0),
    (2, 1, 2, 2, 2.0),
    (2, 2, 2, 2, 2.0),
]
OMEGA_2X2_BMIN = 0.5837
OMEGA_2X2_MINIMIZER = (np.array([0.9946, -0.1040]), np.array([0.9946, -0.1040]))


def omega_2x2_form():
    return BiQuadraticForm.from_omega_entries(2, 2, OMEGA_2X2_ENTRIES)


# Full-tensor instance on (3,3): TENSOR_3X3[i, j, k, l] multiplies x_i y_j x_k y_l.
# Stored below as blocks over (i, j) for each fixed (k, l).
_T33_BLOCKS = {
    (1, 1): [[-0.9727, 0.3169, -0.3437],
             [-0.6332, -0.7866, 0.4257],
             [-0.3350, -0.9896, -0.4323]],
    (2, 1): [[-0.6332, -0.7866, 0.4257],
             [0.7387, 0.6873, -0.3248],
             [-0.7986, -0.5988, -0.9485]],
    (3, 1): [[-0.3350, -0.9896, -0.4323],
             [-0.7986, -0.5988, -0.9485],
             [0.5853, 0.5921, 0.6301]],
    (1, 2): [[0.3169, 0.6158, -0.0184],
             [-0.7866, 0.0160, 0.0085],
             [-0.9896, -0.6663, 0.2559]],
    (2, 2): [[-0.7866, 0.0160, 0.0085],
             [0.6873, 0.5160, -0.0216],
             [-0.5988, 0.0411, 0.9857]],
    (3, 2): [[-0.9896, -0.6663, 0.2559],
             [-0.5988, 0.0411, 0.9857],
             [0.5921, -0.2907, -0.3881]],
    (1, 3): [[-0.3437, -0.0184, 0.5649],
             [0.4257, 0.0085, -0.1439],
             [-0.4323, 0.2559, 0.6162]],
    (2, 3): [[0.4257, 0.0085, -0.1439],
             [-0.3248, -0.0216, -0.0037],
             [-0.9485, 0.9857, -0.7734]],
    (3, 3): [[-0.4323, 0.2559, 0.6162],
             [-0.9485, 0.9857, -0.7734],
             [0.6301, -0.3881, -0.8526]],
}

TENSOR_3X3 = np.zeros((3, 3, 3, 3))
for (_k, _l), _block in _T33_BLOCKS.items():
    TENSOR_3X3[:, :, _k - 1, _l - 1] = np.array(_block)

TENSOR_3X3_BMIN = -2.3197
TENSOR_3X3_MINIMIZER = (np.array([-0.3496, -0.4003, 0.8471]),
                        np.array([-0.5017, 0.5383, 0.6772]))


def tensor_3x3_form():
    return BiQuadraticForm.from_full_tensor(3, 3, TENSOR_3X3)


# Cyclic nonnegative form on (3,3): zero exactly at three coordinate pairs.
CYCLIC_3X3_ENTRIES = [
    (1, 1, 1, 1, 1.0), (2, 2, 2, 2, 1.0), (3, 3, 3, 3, 1.0),
    (1, 2, 1, 2, 2.0), (2, 3, 2, 3, 2.0), (3, 1, 3, 1, 2.0),
    (1, 1, 2, 2, -2.0), (1, 1, 3, 3, -2.0), (2, 2, 3, 3, -2.0),
]
CYCLIC_3X3_MINIMIZERS = [
    (np.array([0.0, 1.0, 0.0]), np.array([1.0, 0.0, 0.0])),
    (np.array([0.0, 0.0, 1.0]), np.array([0.0, 1.0, 0.0])),
    (np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0])),
]


def cyclic_3x3_form():
    return BiQuadraticForm.from_omega_entries(3, 3, CYCLIC_3X3_ENTRIES)


# Harmonic-coefficient form on (4,4): coefficient of x_i y_j x_k y_l is
# 1/(i+j+k+l) over the canonical index set.
HARMONIC_4X4_ENTRIES = [
    (i, j, k, l, 1.0 / (i + j + k + l))
    for i in range(1, 5) for k in range(i, 5)
    for j in range(1, 5) for l in range(j, 5)
]
HARMONIC_4X4_BMIN = 0.0175
HARMONIC_4X4_MINIMIZER = (
    np.array([-0.0565, -0.1415, -0.5192, 0.8410]),
    np.array([-0.0565, -0.1415, -0.5192, 0.8410]),
)


def harmonic_4x4_form():
    return BiQuadraticForm.from_omega_entries(4, 4, HARMONIC_4X4_ENTRIES)


# --- separability instances -------------------------------------------------

# Free entries a_{ijkl} (1-based canonical indices) of a 2x2-by-2x2 instance
# that admits no separable decomposition.
SEP_2X2_OMEGA = {
    (1, 1, 1, 1): 0.4691, (1, 1, 1, 2): 0.1203, (1, 1, 2, 1): -0.1203,
    (1, 1, 2, 2): 0.4691, (1, 2, 1, 2): 0.0309, (1, 2, 2, 2): 0.1203,
    (2, 1, 2, 1): 0.0309, (2, 1, 2, 2): -0.1203, (2, 2, 2, 2): 0.4691,
}


def sep_2x2_matrix():
    a = {tuple(i - 1 for i in idx): v for idx, v in SEP_2X2_OMEGA.items()}
    return KroneckerMatrix.from_omega(2, 2, a)


def _e(n, i):
    v = np.zeros(n)
    v[i] = 1.0
    return v


def sep_3x3_entangled_matrix():
    # A1 + 2*A2 - A3/2 with A1 = sum (e_i e_i^T) kron (e_i e_i^T),
    # A2 cyclic diagonal terms, A3 symmetrized off-diagonal terms.
    e = [_e(3, i) for i in range(3)]
    a1 = sum(np.kron(np.outer(e[i], e[i]), np.outer(e[i], e[i])) for i in range(3))
    a2 = (np.kron(np.outer(e[0], e[0]), np.outer(e[1], e[1]))
          + np.kron(np.outer(e[1], e[1]), np.outer(e[2], e[2]))
          + np.kron(np.outer(e[2], e[2]), np.outer(e[0], e[0])))
    s01 = np.outer(e[0], e[1]) + np.outer(e[1], e[0])
    s02 = np.outer(e[0], e[2]) + np.outer(e[2], e[0])
    s12 = np.outer(e[1], e[2]) + np.outer(e[2], e[1])
    a3 = np.kron(s01, s01) + np.kron(s02, s02) + np.kron(s12, s12)
    return KroneckerMatrix(3, 3, a1 + 2.0 * a2 - 0.5 * a3)


def sep_4x4_sum_pattern_matrix():
    # A[pi(i,j), pi(k,l)] = i + j + k + l (1-based), p = q = 4.
    mat = np.zeros((16, 16))
    for i in range(4):
        for j in range(4):
            for k in range(4):
                for l in range(4):
                    mat[i * 4 + j, k * 4 + l] = (i + 1) + (j + 1) + (k + 1) + (l + 1)
    return KroneckerMatrix(4, 4, mat)


def sep_2x3_separable_matrix():
    b1 = np.array([[2.0, 1.0], [1.0, 3.0]])
    c1 = np.array([[3.0, -1.0, -1.0], [-1.0, 3.0, -1.0], [-1.0, -1.0, 3.0]])
    b2 = np.array([[1.0, -1.0], [-1.0, 2.0]])
    c2 = np.array([[4.0, 2.0, -1.0], [2.0, 4.0, 2.0], [-1.0, 2.0, 4.0]])
    return KroneckerMatrix(2, 3, np.kron(b1, c1) + np.kron(b2, c2))


SEP_2X3_RANK = 7


def sep_3x3_separable_matrix():
    e = [_e(3, i) for i in range(3)]
    mat = np.kron(np.eye(3), np.eye(3))
    mat += np.kron(np.outer(e[0], e[0]), np.outer(e[1], e[1]))
    mat += np.kron(np.outer(e[1], e[1]), np.outer(e[2], e[2]))
    mat += np.kron(np.outer(e[2], e[2]), np.outer(e[0], e[0]))
    return KroneckerMatrix(3, 3, mat)


SEP_3X3_RANK = 15
