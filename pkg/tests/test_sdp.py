import numpy as np
import pytest

from posep.sdp import (SdpProblem, dump_problem, load_problem, smat, solve,
                       svec, verify_dual_infeasibility,
                       verify_primal_infeasibility)
from posep.sdp.kernels import HAVE_NUMBA, KernelData, build_h

from planted import planted_sdp


def test_svec_round_trip():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((5, 5))
    A = A + A.T
    assert np.allclose(smat(svec(A), 5), A)


def test_svec_preserves_inner_product():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((4, 4))
    A = A + A.T
    B = rng.standard_normal((4, 4))
    B = B + B.T
    assert np.isclose(svec(A) @ svec(B), np.vdot(A, B))


def test_from_standard_rejects_nonsymmetric():
    A = np.array([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        SdpProblem.from_standard([("psd", 2)], [A], [])


def test_trivial_minimum():
    """Minimal trace subject to a pinned corner entry."""
    A = np.zeros((2, 2))
    A[0, 0] = 1.0
    prob = SdpProblem.from_standard([("psd", 2)], [np.eye(2)], [([A], 1.0)])
    out = solve(prob)
    assert out.status == "Optimal"
    assert abs(out.primal_objective - 1.0) < 1e-7
    X = out.primal_block_matrices(prob)[0]
    target = np.zeros((2, 2))
    target[0, 0] = 1.0
    assert np.abs(X - target).max() < 1e-6


def test_trivial_infeasible_with_certificate():
    """Negative trace is impossible on the psd cone."""
    prob = SdpProblem.from_standard([("psd", 2)], [np.eye(2)],
                                    [([np.eye(2)], -1.0)])
    out = solve(prob)
    assert out.status == "PrimalInfeasible"
    cert = verify_primal_infeasibility(prob, out.ray_y, out.ray_z)
    assert cert["valid"]
    # the ray in matrix form: sum_i yhat_i A_i psd, b'yhat < 0
    G = smat(prob.E.T @ out.ray_y, 2)
    assert np.linalg.eigvalsh(G).min() >= -1e-7
    assert prob.f @ out.ray_y < -1e-8 * np.linalg.norm(out.ray_y)


def test_unbounded_primal_gives_dual_infeasibility_ray():
    prob = SdpProblem.from_standard([("psd", 2)], [-np.eye(2)], [])
    out = solve(prob)
    assert out.status == "DualInfeasible"
    cert = verify_dual_infeasibility(prob, out.ray_x)
    assert cert["valid"]


def test_planted_objectives():
    for seed in range(25):
        rng = np.random.default_rng(seed)
        sides = [int(rng.integers(2, 6)), int(rng.integers(2, 6))]
        nn_len = int(rng.integers(0, 4))
        prob, x_star, z_star, y_star, obj = planted_sdp(rng, sides, nn_len)
        out = solve(prob)
        assert out.status == "Optimal", (seed, out.status, out.message)
        assert abs(out.primal_objective - obj) < 1e-7 * (1 + abs(obj))
        assert abs(out.dual_objective - obj) < 1e-7 * (1 + abs(obj))


def test_planted_solution_vectors_recovered():
    rng = np.random.default_rng(42)
    prob, x_star, z_star, y_star, obj = planted_sdp(rng, [3, 4], 2)
    out = solve(prob)
    assert out.status == "Optimal"
    assert np.abs(out.x - x_star).max() < 1e-8
    assert np.abs(out.y - y_star).max() < 1e-8
    assert np.abs(out.z - z_star).max() < 1e-8


def test_weak_duality_along_iterates():
    """The primal-dual gap identity bounds how far below the dual the
    primal value can sit on any iterate; at the solution the slack is
    at tolerance level."""
    rng = np.random.default_rng(3)
    prob = planted_sdp(rng, [3, 3], 0)[0]
    out = solve(prob, collect_trace=True)
    assert out.status == "Optimal"
    for rec in out.trace:
        lower = rec["dual_objective"] - rec["gap_slack"] - 1e-9
        assert rec["primal_objective"] >= lower
    scale = 1 + abs(out.primal_objective) + abs(out.dual_objective)
    assert out.primal_objective >= out.dual_objective - 10 * 1e-8 * scale


def test_row_rescaling_invariance():
    rng = np.random.default_rng(5)
    prob, x_star, _, _, obj = planted_sdp(rng, [3, 2], 0)
    scales = rng.uniform(0.1, 10.0, prob.m_eq)
    rescaled = SdpProblem(prob.blocks, prob.c, prob.E * scales[:, None],
                          prob.f * scales, prob.F)
    out1 = solve(prob)
    out2 = solve(rescaled)
    assert out1.status == "Optimal" and out2.status == "Optimal"
    assert np.abs(out1.x - out2.x).max() < 1e-6


def test_optimal_primal_blocks_are_psd():
    rng = np.random.default_rng(8)
    prob = planted_sdp(rng, [4, 2], 3)[0]
    out = solve(prob)
    assert out.status == "Optimal"
    for block in out.primal_block_matrices(prob):
        if block.ndim == 2:
            assert np.linalg.eigvalsh(block).min() >= -1e-9
        else:
            assert block.min() >= -1e-9


def test_equality_min_singular_value():
    rng = np.random.default_rng(9)
    prob = planted_sdp(rng, [3], 0)[0]
    assert prob.equality_min_singular_value() > 1e-10


def test_solver_is_deterministic():
    rng = np.random.default_rng(11)
    prob = planted_sdp(rng, [3, 3], 1)[0]
    out1 = solve(prob)
    out2 = solve(prob)
    assert out1.status == out2.status
    assert np.array_equal(out1.x, out2.x)
    assert np.array_equal(out1.y, out2.y)


def test_dump_round_trip(tmp_path):
    rng = np.random.default_rng(13)
    prob = planted_sdp(rng, [3, 2], 2)[0]
    path = tmp_path / "problem.sdp"
    dump_problem(prob, path)
    loaded = load_problem(path)
    assert loaded.blocks.specs == prob.blocks.specs
    assert np.allclose(loaded.c, prob.c)
    assert np.allclose(loaded.E, prob.E)
    assert np.allclose(loaded.f, prob.f)
    assert np.allclose(loaded.F.toarray(), prob.F.toarray())
    out1 = solve(prob)
    out2 = solve(loaded)
    assert abs(out1.primal_objective - out2.primal_objective) < 1e-9


def test_kernel_backends_agree():
    if not HAVE_NUMBA:
        pytest.skip("numba unavailable")
    rng = np.random.default_rng(17)
    prob = planted_sdp(rng, [4, 3], 2)[0]
    kdata = KernelData(prob)
    scalings = []
    for kind, n in prob.blocks.specs:
        if kind == "psd":
            M = rng.standard_normal((n, n))
            scalings.append(M @ M.T + n * np.eye(n))
        else:
            scalings.append(rng.uniform(0.5, 2.0, n))
    H1 = build_h(kdata, scalings, backend="numba")
    H2 = build_h(kdata, scalings, backend="numpy")
    assert np.abs(H1 - H2).max() < 1e-10 * max(1.0, np.abs(H2).max())


def test_backend_solutions_agree():
    rng = np.random.default_rng(19)
    prob = planted_sdp(rng, [3, 2], 0)[0]
    out_np = solve(prob, kernel_backend="numpy")
    assert out_np.status == "Optimal"
    if HAVE_NUMBA:
        out_nb = solve(prob, kernel_backend="numba")
        assert abs(out_np.primal_objective - out_nb.primal_objective) < 1e-9
