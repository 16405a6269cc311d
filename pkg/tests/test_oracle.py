import numpy as np
import pytest

from posep.forms import BiQuadraticForm
from posep.oracle import grid_min_bisphere_2x2, multistart_min_bisphere

from cases import GRAM_2X2_BMIN, gram_2x2_form, harmonic_4x4_form


def test_grid_on_reference_instance():
    value, err = grid_min_bisphere_2x2(gram_2x2_form(), 2e-3)
    assert abs(value - GRAM_2X2_BMIN) < 5e-3
    assert 0 < err < 1e-2


def test_grid_on_constant_form():
    form = BiQuadraticForm.from_gram(2, 2, np.eye(4))
    value, _ = grid_min_bisphere_2x2(form, 1e-2)
    assert abs(value - 1.0) < 1e-12


def test_grid_rejects_other_shapes():
    form = BiQuadraticForm.zero(3, 3)
    with pytest.raises(ValueError):
        grid_min_bisphere_2x2(form, 1e-2)


def test_multistart_on_reference_instance():
    value = multistart_min_bisphere(harmonic_4x4_form(), starts=200, seed=0)
    assert abs(value - 0.0175) < 1e-3


def test_multistart_zero_form():
    assert multistart_min_bisphere(BiQuadraticForm.zero(3, 3), starts=5) == 0.0


def test_multistart_is_upper_bound_of_grid():
    for seed in range(5):
        rng = np.random.default_rng(40 + seed)
        M = rng.standard_normal((4, 4))
        form = BiQuadraticForm.from_gram(2, 2, M + M.T)
        grid, err = grid_min_bisphere_2x2(form, 5e-3)
        multi = multistart_min_bisphere(form, starts=30, seed=seed)
        # multistart upper-bounds the true minimum, which sits within
        # err of the grid value
        assert multi >= grid - err - 1e-9
        assert multi <= grid + err + 1e-9
