import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bmcert import landscape, symlin
from bmcert.errors import BadSignVector, DimensionMismatch, NotTangent, TooLarge
from bmcert.landscape import Optimality, Verdict
from bmcert.manifold import project_tangent, random_configuration, random_tangent
from oracles import gradient_fd_error, hessian_fd_error


def complete_graph_laplacian(n):
    return landscape.from_laplacian_matrix(n * np.eye(n) - np.ones((n, n)))


def optimum(n, p):
    return np.full((n, p), 1.0 / np.sqrt(p))


def random_cost(n, seed):
    A = np.random.default_rng(seed).standard_normal((n, n))
    return A + A.T


def kernel_direction(V, a):
    return (V @ a)[:, None] * V - np.outer(np.ones(V.shape[0]), a)


class TestBuildLaplacian:
    def test_all_ones_cost(self):
        lap = landscape.build_laplacian(np.ones((4, 4)))
        np.testing.assert_allclose(lap.L, 4 * np.eye(4) - np.ones((4, 4)), atol=0)
        np.testing.assert_allclose(lap.spectrum.eigenvalues, [0, 4, 4, 4], atol=1e-12)
        assert lap.cond == pytest.approx(1.0, rel=1e-12)

    def test_zero_cost(self):
        lap = landscape.build_laplacian(np.zeros((5, 5)))
        np.testing.assert_array_equal(lap.L, np.zeros((5, 5)))
        assert lap.lambda2 == 0.0
        assert lap.cond == np.inf

    def test_adversarial_spectrum(self, adversarial_cases):
        lap = adversarial_cases[(12, 2)].instance.laplacian()
        w = lap.spectrum.eigenvalues
        np.testing.assert_allclose(w, [0.0] + [1.0] * 2 + [2.0] * 9, atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_kills_ground_truth(self, seed):
        n = 15
        x = np.where(np.random.default_rng(seed).random(n) < 0.5, -1.0, 1.0)
        lap = landscape.build_laplacian(random_cost(n, seed), x)
        assert np.linalg.norm(lap.L @ x) <= 1e-10 * max(1.0, lap.norm) * np.sqrt(n)
        assert lap.lambda2 == lap.spectrum.eigenvalues[1]
        assert lap.lambdaN == lap.spectrum.eigenvalues[-1]

    def test_bad_sign_vector(self):
        with pytest.raises(BadSignVector):
            landscape.build_laplacian(np.ones((3, 3)), [1.0, 0.5, -1.0])
        with pytest.raises(DimensionMismatch):
            landscape.build_laplacian(np.ones((3, 3)), [1.0, -1.0])


class TestRank1Optimality:
    def test_complete_graph(self):
        assert landscape.rank1_optimality(complete_graph_laplacian(6)) is Optimality.UNIQUE_OPTIMAL

    def test_zero(self):
        lap = landscape.from_laplacian_matrix(np.zeros((4, 4)))
        assert landscape.rank1_optimality(lap) is Optimality.OPTIMAL_MAYBE_NOT_UNIQUE

    def test_negative_projector(self):
        lap = landscape.from_laplacian_matrix(-symlin.centering_projector(5))
        assert landscape.rank1_optimality(lap) is Optimality.NOT_CERTIFIED


class TestGradient:
    def test_zero_at_optimum(self):
        L = complete_graph_laplacian(9)
        assert np.abs(landscape.riemannian_gradient(L, optimum(9, 3))).max() <= 1e-13

    def test_zero_at_adversarial_trap(self, adversarial_cases):
        adv = adversarial_cases[(12, 2)]
        g = landscape.riemannian_gradient(adv.instance.laplacian(), adv.V_trap)
        assert np.linalg.norm(g) <= 1e-10

    def test_is_tangent(self):
        L = random_cost(10, 1)
        V = random_configuration(10, 3, 1)
        g = landscape.riemannian_gradient(L, V)
        assert np.abs(np.einsum("ij,ij->i", g, V)).max() <= 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            landscape.riemannian_gradient(np.eye(3), random_configuration(4, 2, 0))

    @pytest.mark.parametrize("n,p", [(8, 2), (20, 3)])
    def test_finite_differences(self, n, p):
        L = landscape.build_laplacian(random_cost(n, n)).L
        V = random_configuration(n, p, (n, p))
        for k in range(20):
            dV = random_tangent(V, (n, p, k))
            assert gradient_fd_error(L, V, dV) <= 1e-5


class TestHessianForm:
    def test_zero_direction(self):
        V = random_configuration(6, 2, 0)
        assert landscape.hessian_quadratic_form(random_cost(6, 0), V, np.zeros((6, 2))) == 0.0

    def test_nonnegative_at_optimum(self):
        L = complete_graph_laplacian(10)
        V = optimum(10, 3)
        for k in range(20):
            assert landscape.hessian_quadratic_form(L, V, random_tangent(V, k)) >= -1e-10

    def test_kernel_directions_at_trap(self, adversarial_cases):
        rng = np.random.default_rng(0)
        for adv in adversarial_cases.values():
            lap = adv.instance.laplacian()
            for _ in range(10):
                dV = kernel_direction(adv.V_trap, rng.standard_normal(adv.p))
                q = landscape.hessian_quadratic_form(lap, adv.V_trap, dV)
                assert abs(q) <= 1e-8 * np.sum(dV * dV)

    def test_rejects_non_tangent(self):
        V = random_configuration(5, 2, 0)
        with pytest.raises(NotTangent):
            landscape.hessian_quadratic_form(np.eye(5), V, V)

    def test_finite_differences_at_critical_points(self, adversarial_cases, ring_traps):
        cases = [(complete_graph_laplacian(12).L, optimum(12, 2))]
        cases += [(a.instance.laplacian().L, a.V_trap) for a in adversarial_cases.values()]
        cases += [(lap.L, V) for lap, V in ring_traps]
        for i, (L, V) in enumerate(cases):
            for k in range(3):
                dV = random_tangent(V, (i, k))
                dV /= np.linalg.norm(dV)
                assert hessian_fd_error(L, V, dV) <= 1e-4


class TestDenseHessian:
    @pytest.mark.parametrize("n,p", [(7, 2), (9, 3), (6, 5)])
    def test_matches_quadratic_form(self, n, p):
        L = random_cost(n, p)
        V = random_configuration(n, p, p)
        basis = landscape.tangent_basis(V)
        H = landscape.dense_tangent_hessian(L, V, basis)
        assert H.shape == (n * (p - 1), n * (p - 1))
        rng = np.random.default_rng(5)
        for _ in range(50):
            c = rng.standard_normal(n * (p - 1))
            dV = landscape.coefficients_to_tangent(basis, c)
            q = landscape.hessian_quadratic_form(L, V, dV)
            assert c @ H @ c == pytest.approx(q, rel=1e-10, abs=1e-12)

    def test_basis_orthonormal_and_tangent(self):
        V = random_configuration(30, 4, 2)
        U = landscape.tangent_basis(V)
        gram = np.einsum("ipa,ipb->iab", U, U)
        np.testing.assert_allclose(gram, np.broadcast_to(np.eye(3), gram.shape), atol=1e-14)
        assert np.abs(np.einsum("ipa,ip->ia", U, V)).max() <= 1e-14

    def test_min_eig_equals_min_over_unit_tangents(self):
        # the basis is orthonormal, so the Rayleigh quotient of H is the form on unit tangents
        L = random_cost(8, 3)
        V = random_configuration(8, 3, 3)
        basis = landscape.tangent_basis(V)
        dec = symlin.eig(landscape.dense_tangent_hessian(L, V, basis))
        dV = landscape.coefficients_to_tangent(basis, dec.eigenvectors[:, 0])
        assert np.linalg.norm(dV) == pytest.approx(1.0, rel=1e-12)
        assert landscape.hessian_quadratic_form(L, V, dV) == pytest.approx(dec.eigenvalues[0], rel=1e-10)

    def test_psd_at_optimum(self):
        lap = complete_graph_laplacian(15)
        assert landscape.min_hessian_eigenvalue(lap, optimum(15, 3)) >= -1e-9 * lap.norm

    def test_adversarial_is_second_order(self, adversarial_cases):
        adv = adversarial_cases[(12, 2)]
        lap = adv.instance.laplacian()
        assert landscape.min_hessian_eigenvalue(lap, adv.V_trap) >= -1e-8 * lap.norm

    def test_size_cap(self):
        V = np.zeros((2501, 3))
        V[:, 0] = 1.0
        with pytest.raises(TooLarge):
            landscape.dense_tangent_hessian(np.zeros((2501, 2501)), V)

    def test_p1_has_trivial_tangent_space(self):
        assert landscape.min_hessian_eigenvalue(np.eye(3), np.ones((3, 1))) == 0.0


class TestClassifyPoint:
    def test_optimum(self):
        lap = complete_graph_laplacian(10)
        rep = landscape.classify_point(lap, optimum(10, 2))
        assert rep.is_first_order and rep.is_second_order and rep.is_global
        assert rep.energy <= 1e-10

    def test_adversarial_trap(self, adversarial_cases):
        adv = adversarial_cases[(12, 2)]
        rep = landscape.classify_point(adv.instance.laplacian(), adv.V_trap)
        assert rep.is_first_order and rep.is_second_order and not rep.is_global
        assert rep.energy == pytest.approx(12.0, rel=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_point_not_critical(self, seed):
        lap = landscape.build_laplacian(random_cost(12, seed))
        rep = landscape.classify_point(lap, random_configuration(12, 3, seed))
        assert not rep.is_first_order
        assert not rep.is_second_order

    def test_report_dict_round_trip(self):
        rep = landscape.classify_point(complete_graph_laplacian(5), optimum(5, 2))
        d = rep.to_dict()
        assert d["is_global"] is True
        assert set(d["tolerances"]) == {"grad_tol", "hess_tol", "opt_tol"}


class TestBenignVerdict:
    def test_complete_graph(self):
        assert landscape.theorem1_verdict(complete_graph_laplacian(10), 2) is Verdict.BENIGN_CERTIFIED

    def test_adversarial_is_not_certified(self, adversarial_cases):
        for adv in adversarial_cases.values():
            assert landscape.theorem1_verdict(adv.instance.laplacian(), adv.p) is Verdict.NOT_CERTIFIED

    def test_adversarial_certified_one_rank_up(self, adversarial_cases):
        adv = adversarial_cases[(12, 2)]
        assert landscape.theorem1_verdict(adv.instance.laplacian(), 3) is Verdict.BENIGN_CERTIFIED

    def test_zero(self):
        lap = landscape.from_laplacian_matrix(np.zeros((4, 4)))
        assert landscape.theorem1_verdict(lap, 10) is Verdict.NOT_CERTIFIED


class TestInvariances:
    @settings(max_examples=15, deadline=None)
    @given(n=st.integers(3, 12), p=st.integers(2, 4), seed=st.integers(0, 1000))
    def test_sign_change_of_variable(self, n, p, seed):
        rng = np.random.default_rng(seed)
        C = random_cost(n, seed)
        x = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        V = random_configuration(n, p, seed)
        dV = random_tangent(V, seed + 1)
        lap_x = landscape.build_laplacian(C, x)
        lap_1 = landscape.build_laplacian(C * np.outer(x, x))
        W = x[:, None] * V
        dW = x[:, None] * dV
        scale = max(1.0, lap_x.norm) * n
        assert landscape.energy(lap_x, V) == pytest.approx(landscape.energy(lap_1, W), abs=1e-10 * scale)
        g_x = np.linalg.norm(landscape.riemannian_gradient(lap_x, V))
        g_1 = np.linalg.norm(landscape.riemannian_gradient(lap_1, W))
        assert g_x == pytest.approx(g_1, rel=1e-10, abs=1e-12 * scale)
        h_x = landscape.hessian_quadratic_form(lap_x, V, dV)
        h_1 = landscape.hessian_quadratic_form(lap_1, W, dW)
        assert h_x == pytest.approx(h_1, rel=1e-10, abs=1e-12 * scale)
        m_x = landscape.min_hessian_eigenvalue(lap_x, V)
        m_1 = landscape.min_hessian_eigenvalue(lap_1, W)
        assert m_x == pytest.approx(m_1, rel=1e-9, abs=1e-10 * scale)

    def test_diagonal_shift(self):
        n, p = 10, 3
        C = random_cost(n, 4)
        shift = np.random.default_rng(4).standard_normal(n)
        L0 = landscape.build_laplacian(C).L
        L1 = landscape.build_laplacian(C - np.diag(shift)).L
        V = random_configuration(n, p, 4)
        dV = random_tangent(V, 5)
        g0 = landscape.riemannian_gradient(L0, V)
        g1 = landscape.riemannian_gradient(L1, V)
        np.testing.assert_allclose(g1, g0, rtol=1e-10, atol=1e-12 * np.abs(g0).max())
        h0 = landscape.hessian_quadratic_form(L0, V, dV)
        assert landscape.hessian_quadratic_form(L1, V, dV) == pytest.approx(h0, rel=1e-10)


def test_default_tolerances_scale():
    lap = complete_graph_laplacian(16)
    tols = landscape.default_tolerances(lap, 2)
    assert tols.grad_tol == pytest.approx(1e-8 * 16 * np.sqrt(32))
    assert tols.hess_tol == pytest.approx(1e-8 * 16)
    assert tols.opt_tol == 1e-6


def test_distance_to_optimum_expanded_form_agrees():
    V = random_configuration(20, 3, 0)
    x = np.ones(20)
    direct = np.linalg.norm(V @ V.T - np.outer(x, x)) / 20
    assert landscape.distance_to_optimum(V, x) == pytest.approx(direct, rel=1e-12)
    assert project_tangent(V, V).max() <= 1e-15
