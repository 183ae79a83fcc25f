import numpy as np
import pytest

from vilab.problems import (
    MatrixGameKind,
    diverges_for_all_second_factors,
    load_matrix_csv,
    make_forsaken,
    make_lower_bound,
    make_matrix_game,
    make_polar_game,
    make_qp_lagrangian,
    save_matrix_csv,
    spectral_norm,
)


def numeric_jacobian(F, z, h=1e-6):
    d = len(z)
    J = np.zeros((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        J[:, j] = (F(z + e) - F(z - e)) / (2 * h)
    return J


def lipschitz_sample_check(prob, box_scale=2.0, n_pairs=1000, seed=0):
    rng = np.random.default_rng(seed)
    L = prob.lipschitz
    for _ in range(n_pairs):
        u = rng.uniform(-box_scale, box_scale, prob.dim)
        v = rng.uniform(-box_scale, box_scale, prob.dim)
        u = prob.projector.project(u)
        v = prob.projector.project(v)
        dz = np.linalg.norm(u - v)
        if dz == 0:
            continue
        assert np.linalg.norm(prob.F(u) - prob.F(v)) <= L * dz * (1 + 1e-9)


class TestSpectralNorm:
    @pytest.mark.parametrize("seed", range(5))
    def test_matches_svd(self, seed):
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((17, 13))
        assert spectral_norm(A) == pytest.approx(np.linalg.norm(A, 2), rel=1e-9)

    def test_zero_matrix(self):
        assert spectral_norm(np.zeros((3, 3))) == 0.0


class TestMatrixGame:
    def test_random_entries_distribution(self):
        prob = make_matrix_game("random", d=50, seed=123)
        A = prob.gap_spec.A
        assert A.shape == (50, 50)
        assert A.min() >= -1.0 and A.max() <= 1.0
        # uniform[-1,1]: mean ~ 0, variance ~ 1/3
        assert abs(A.mean()) < 0.05
        assert abs(A.var() - 1 / 3) < 0.03

    def test_operator_shape_and_skewness(self):
        prob = make_matrix_game("random", d=10, seed=1)
        rng = np.random.default_rng(0)
        for _ in range(20):
            z, w = rng.standard_normal(20), rng.standard_normal(20)
            # bilinear operator is affine skew: <F(z)-F(w), z-w> = 0
            inner = np.dot(prob.F(z) - prob.F(w), z - w)
            assert abs(inner) <= 1e-12 * (1 + np.linalg.norm(z) * np.linalg.norm(w))

    def test_exact_lipschitz_is_matrix_norm(self):
        prob = make_matrix_game("random", d=12, seed=5)
        A = prob.gap_spec.A
        assert prob.lipschitz == pytest.approx(np.linalg.norm(A, 2), rel=1e-9)
        lipschitz_sample_check(prob)

    def test_identity_game_uniform_is_optimal(self):
        prob = make_matrix_game(A=np.eye(2))
        z = np.array([0.5, 0.5, 0.5, 0.5])
        assert prob.gap_spec.evaluate(prob, z) == pytest.approx(0.0, abs=1e-15)

    def test_policeman_burglar_structure(self):
        prob = make_matrix_game("policeman-burglar", d=20, seed=3)
        A = prob.gap_spec.A
        assert np.allclose(np.diag(A), 0.0)  # catch probability 1 at distance 0
        assert np.all(A >= 0)

    def test_test_matrix_default(self):
        prob = make_matrix_game("test-matrix", d=4)
        A = prob.gap_spec.A
        assert A[0, 0] == pytest.approx(1 / 7)  # (1+1-1)/(2*4-1)
        assert A[3, 3] == pytest.approx(1.0)

    def test_csv_roundtrip(self, tmp_path):
        prob = make_matrix_game("random", d=7, seed=9)
        A = prob.gap_spec.A
        path = tmp_path / "game.csv"
        save_matrix_csv(A, path)
        B = load_matrix_csv(path)
        np.testing.assert_array_equal(A, B)  # %.17g is round-trip exact
        injected = make_matrix_game(A=B)
        z = np.linspace(0, 1, 14)
        np.testing.assert_array_equal(prob.F(z), injected.F(z))

    def test_kind_enum_and_strings(self):
        assert make_matrix_game(MatrixGameKind.RANDOM, d=3, seed=0).dim == 6
        with pytest.raises(ValueError):
            make_matrix_game("nope", d=3)


class TestQpLagrangian:
    def test_planted_is_stationary(self):
        rng = np.random.default_rng(2)
        x_star, y_star = rng.standard_normal(30), rng.standard_normal(30)
        prob = make_qp_lagrangian(d=30, planted=(x_star, y_star), seed=7)
        residual = np.linalg.norm(prob.F(prob.solution))
        assert residual < 1e-12

    def test_monotone(self):
        prob = make_qp_lagrangian(d=15, seed=1)
        rng = np.random.default_rng(1)
        for _ in range(30):
            u, v = rng.standard_normal(30), rng.standard_normal(30)
            assert np.dot(prob.F(u) - prob.F(v), u - v) >= -1e-10

    def test_lipschitz_sampled(self):
        prob = make_qp_lagrangian(d=20, seed=4)
        lipschitz_sample_check(prob)

    def test_planted_solution_vi_inequality(self):
        # <F(z), z - z*> >= 0 along sampled directions (monotone + F(z*) = 0)
        rng = np.random.default_rng(8)
        prob = make_qp_lagrangian(d=10, planted=(rng.standard_normal(10),
                                                 rng.standard_normal(10)), seed=3)
        for _ in range(50):
            z = prob.solution + rng.standard_normal(20)
            assert np.dot(prob.F(z), z - prob.solution) >= -1e-10


class TestForsaken:
    def test_operator_value_at_origin(self):
        prob = make_forsaken()
        np.testing.assert_allclose(prob.F(np.zeros(2)), [-0.45, 0.0], atol=1e-15)

    def test_reference_solution_residual(self):
        prob = make_forsaken()
        assert np.linalg.norm(prob.F(prob.solution)) < 0.05

    def test_jacobian_oracle(self):
        prob = make_forsaken()
        rng = np.random.default_rng(0)
        for _ in range(10):
            z = rng.uniform(-1.5, 1.5, 2)
            J = numeric_jacobian(prob.F, z)
            assert prob.jacobian_spectral_norm(z) == pytest.approx(
                np.linalg.norm(J, 2), rel=1e-5)

    def test_batch_matches_scalar(self):
        prob = make_forsaken()
        rng = np.random.default_rng(1)
        Z = rng.uniform(-2, 2, (40, 2))
        batch = prob.operator_batch(Z)
        for i in range(40):
            np.testing.assert_allclose(batch[i], prob.F(Z[i]), atol=1e-14)


class TestPolarGame:
    def test_origin_is_zero(self):
        prob = make_polar_game(1 / 3)
        np.testing.assert_allclose(prob.F(np.zeros(2)), [0.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(prob.solution, [0.0, 0.0])

    def test_unit_circle_is_pure_rotation(self):
        # the cubic factor vanishes on ||z|| = 1, leaving F = (-y, x)
        prob = make_polar_game(0.7)
        for t in np.linspace(0, 2 * np.pi, 17):
            z = np.array([np.cos(t), np.sin(t)])
            np.testing.assert_allclose(prob.F(z), [-z[1], z[0]], atol=1e-12)

    def test_jacobian_oracle(self):
        prob = make_polar_game(3.0)
        rng = np.random.default_rng(5)
        for _ in range(10):
            z = rng.uniform(-1.1, 1.1, 2)
            J = numeric_jacobian(prob.F, z)
            assert prob.jacobian_spectral_norm(z) == pytest.approx(
                np.linalg.norm(J, 2), rel=1e-4)

    def test_requires_positive_a(self):
        with pytest.raises(ValueError):
            make_polar_game(0.0)


class TestLowerBound:
    def test_exact_constants(self):
        prob = make_lower_bound(a=np.sqrt(3.7), b=-1.0)
        assert prob.lipschitz == pytest.approx(np.sqrt(4.7))
        assert prob.rho == pytest.approx(2.0 / 4.7)
        np.testing.assert_allclose(prob.F(np.zeros(2)), [0.0, 0.0])

    def test_weak_minty_inequality_everywhere(self):
        # <F(z), z - 0> = b ||z||^2 >= -(rho/2) ||F(z)||^2 with equality
        prob = make_lower_bound(a=1.5, b=-0.5)
        rng = np.random.default_rng(0)
        for _ in range(50):
            z = rng.standard_normal(2) * 3
            lhs = np.dot(prob.F(z), z)
            rhs = -(prob.rho / 2) * np.sum(prob.F(z) ** 2)
            assert lhs >= rhs - 1e-12
            assert lhs == pytest.approx(rhs, abs=1e-10)  # tight instance

    def test_divergence_regime_classifier(self):
        # rho*L > 1 iff 4 b^2 > a^2 + b^2
        assert not diverges_for_all_second_factors(np.sqrt(3.7), -1.0)  # 4 < 4.7
        assert diverges_for_all_second_factors(1.0, -1.0)  # 4 > 2

    def test_lipschitz_sampled(self):
        lipschitz_sample_check(make_lower_bound(a=2.0, b=-0.3))

    def test_requires_signs(self):
        with pytest.raises(ValueError):
            make_lower_bound(a=-1.0, b=-1.0)
        with pytest.raises(ValueError):
            make_lower_bound(a=1.0, b=0.5)
