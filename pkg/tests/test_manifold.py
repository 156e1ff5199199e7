import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bmcert import landscape
from bmcert.errors import DegenerateRow, DimensionMismatch, NonFinite, NotOnManifold, NotTangent, ParseError
from bmcert.manifold import (
    align_columns,
    alignment_residual,
    check_configuration,
    check_tangent,
    format_configuration,
    load_configuration,
    order_parameter,
    parse_configuration,
    project_tangent,
    random_configuration,
    random_tangent,
    retract,
    save_configuration,
)

shapes = st.tuples(st.integers(1, 30), st.integers(1, 5))


class TestProjectTangent:
    def test_tangent_input_unchanged(self):
        V = random_configuration(8, 3, 1)
        X = random_tangent(V, 2)
        np.testing.assert_allclose(project_tangent(V, X), X, atol=1e-14)

    def test_projects_out_own_rows(self):
        V = random_configuration(8, 3, 1)
        np.testing.assert_allclose(project_tangent(V, V), 0.0, atol=1e-15)

    def test_hand_example(self):
        V = np.eye(2)
        np.testing.assert_array_equal(project_tangent(V, np.ones((2, 2))), [[0.0, 1.0], [1.0, 0.0]])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            project_tangent(np.eye(2), np.ones((3, 2)))

    @settings(max_examples=50, deadline=None)
    @given(shape=shapes, seed=st.integers(0, 10_000))
    def test_idempotent_and_self_adjoint(self, shape, seed):
        n, p = shape
        rng = np.random.default_rng(seed)
        V = random_configuration(n, p, seed)
        X, Y = rng.standard_normal((2, n, p))
        PX = project_tangent(V, X)
        np.testing.assert_allclose(project_tangent(V, PX), PX, atol=1e-14)
        lhs = np.sum(PX * Y)
        rhs = np.sum(X * project_tangent(V, Y))
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-13)
        assert np.abs(np.einsum("ij,ij->i", PX, V)).max() <= 1e-10 * max(1.0, np.abs(X).max())


class TestRetract:
    def test_zero_step(self):
        V = random_configuration(5, 2, 0)
        np.testing.assert_array_equal(retract(V, random_tangent(V, 1), 0.0), V)

    def test_hand_example(self):
        out = retract(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]), 1.0)
        np.testing.assert_allclose(out, [[2**-0.5, 2**-0.5]], atol=1e-16)

    def test_unit_rows(self):
        V = random_configuration(40, 4, 3)
        out = retract(V, random_tangent(V, 4), 2.5)
        assert np.abs(np.linalg.norm(out, axis=1) - 1.0).max() <= 1e-15

    def test_degenerate_row(self):
        V = np.array([[1.0, 0.0], [0.0, 1.0]])
        with pytest.raises(DegenerateRow):
            retract(V, -V, 1.0)


class TestRandomConfiguration:
    def test_deterministic(self):
        np.testing.assert_array_equal(random_configuration(6, 3, 42), random_configuration(6, 3, 42))

    def test_seed_changes_draw(self):
        assert not np.array_equal(random_configuration(6, 3, 1), random_configuration(6, 3, 2))

    def test_p1_is_signs(self):
        V = random_configuration(50, 1, 0)
        assert set(np.unique(V)) <= {-1.0, 1.0}

    def test_uniform_mean(self):
        draws = np.vstack([random_configuration(1, 3, (9, k)) for k in range(10_000)])
        assert np.abs(draws.mean(axis=0)).max() <= 0.05

    def test_on_manifold(self):
        check_configuration(random_configuration(100, 5, 0))


class TestValidation:
    def test_not_on_manifold(self):
        with pytest.raises(NotOnManifold):
            check_configuration([[1.0, 1.0]])

    def test_nonfinite(self):
        with pytest.raises(NonFinite):
            check_configuration([[np.nan, 1.0]])

    def test_not_tangent(self):
        V = np.eye(2)
        with pytest.raises(NotTangent):
            check_tangent(V, V)


class TestAlignColumns:
    def test_balanced_configuration_untouched(self):
        V = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
        out, G = align_columns(V)
        np.testing.assert_array_equal(out, V)
        np.testing.assert_array_equal(G, np.eye(2))

    def test_first_axis_already_aligned(self):
        V = np.zeros((7, 3))
        V[:, 0] = 1.0
        out, G = align_columns(V)
        np.testing.assert_allclose(out, V, atol=1e-15)
        assert out[:, 0].sum() == pytest.approx(7.0)

    def test_seed7_example(self):
        V = random_configuration(10, 3, 7)
        out, G = align_columns(V)
        u = out.sum(axis=0)
        assert np.linalg.norm(u) == pytest.approx(u[0], rel=1e-12)
        assert 0.0 <= u[0] <= 10.0

    @pytest.mark.parametrize("n,p", [(5, 2), (10, 3), (50, 4)])
    def test_postcondition_many_seeds(self, n, p):
        for seed in range(100):
            V = random_configuration(n, p, (n, p, seed))
            out, G = align_columns(V)
            np.testing.assert_allclose(G.T @ G, np.eye(p), atol=1e-14)
            np.testing.assert_allclose(out, V @ G, atol=0)
            u = out.sum(axis=0)
            assert np.abs(u[1:]).max() <= 1e-10
            assert u[0] >= 0.0
            assert alignment_residual(out) <= 1e-10

    def test_negative_first_coordinate_flipped(self):
        V = np.tile([-1.0, 0.0], (4, 1))
        out, _ = align_columns(V)
        assert out.sum(axis=0)[0] == pytest.approx(4.0)

    @settings(max_examples=30, deadline=None)
    @given(shape=st.tuples(st.integers(2, 20), st.integers(2, 5)), seed=st.integers(0, 10_000))
    def test_energy_invariant_under_rotation(self, shape, seed):
        n, p = shape
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((n, n))
        L = A + A.T
        V = random_configuration(n, p, seed)
        G, _ = np.linalg.qr(rng.standard_normal((p, p)))
        e0 = landscape.energy(L, V)
        assert landscape.energy(L, V @ G) == pytest.approx(e0, rel=1e-10, abs=1e-10 * np.abs(L).sum())


def test_order_parameter_range():
    V = np.tile([0.0, 1.0], (5, 1))
    assert order_parameter(V) == 1.0
    assert order_parameter(np.array([[1.0, 0.0], [-1.0, 0.0]])) == 0.0


class TestConfigurationFormat:
    def test_round_trip(self, tmp_path):
        V = random_configuration(9, 3, 5)
        path = tmp_path / "v.txt"
        save_configuration(path, V)
        np.testing.assert_array_equal(load_configuration(path), V / np.linalg.norm(V, axis=1)[:, None])
        assert np.abs(load_configuration(path) - V).max() <= 1e-15

    def test_renormalizes_close_rows(self):
        W = parse_configuration("2 2\n1.0000004 0\n0 0.9999996\n")
        np.testing.assert_array_equal(W, np.eye(2))

    def test_rejects_far_rows(self):
        with pytest.raises(NotOnManifold):
            parse_configuration("1 2\n1.0 0.01\n")

    @pytest.mark.parametrize(
        "text", ["", "3\n1 0\n", "2 2\n1 0\n", "1 2\n1 0 0\n", "1 2\nfoo 1\n", "1 1\nnan\n"]
    )
    def test_malformed(self, text):
        with pytest.raises(ParseError):
            parse_configuration(text)

    def test_format_header(self):
        assert format_configuration(np.eye(2)).splitlines()[0] == "2 2"
