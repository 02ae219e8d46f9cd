import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lpboot import dgp, regress
from lpboot.errors import InsufficientSampleError, SingularDesignError
from lpboot.seeding import substream


def impulse_propagation(coefs, s):
    r = np.zeros(s + 1)
    r[0] = 1.0
    for h in range(1, s + 1):
        for i, c in enumerate(coefs, start=1):
            if h - i >= 0:
                r[h] += c * r[h - i]
    return r


class TestLagMatrix:
    def test_shift_by_one(self):
        lm = regress.build_lag_matrix(np.arange(1.0, 6.0), p=1, h=0)
        np.testing.assert_array_equal(lm.targets.ravel(), [2, 3, 4, 5])
        np.testing.assert_array_equal(lm.X.ravel(), [1, 2, 3, 4])

    def test_row_count(self):
        lm = regress.build_lag_matrix(np.arange(100.0), p=3, h=10)
        assert lm.rows == 87

    def test_alignment(self):
        y = np.arange(100.0)
        lm = regress.build_lag_matrix(y, p=3, h=10)
        # target y_{t+h} against (y_{t-1}, y_{t-2}, y_{t-3})
        np.testing.assert_array_equal(lm.targets[:, 0] - lm.X[:, 0], 11.0)
        np.testing.assert_array_equal(lm.X[:, 0] - lm.X[:, 2], 2.0)

    def test_intercept_column(self):
        lm = regress.build_lag_matrix(np.arange(20.0), p=2, intercept=True)
        np.testing.assert_array_equal(lm.X[:, 0], 1.0)

    def test_multivariate_columns(self):
        y = np.arange(40.0).reshape(20, 2)
        lm = regress.build_lag_matrix(y, p=2)
        assert lm.X.shape == (18, 4)
        np.testing.assert_array_equal(lm.X[0], [2, 3, 0, 1])

    def test_too_short(self):
        with pytest.raises(InsufficientSampleError):
            regress.fit_var(np.arange(5.0), 2)


class TestOls:
    def test_exact_fit(self):
        x = np.linspace(1, 2, 10)[:, None]
        fit = regress.ols(x, 2 * x[:, 0])
        assert fit.coefficients[0] == pytest.approx(2.0)
        np.testing.assert_allclose(fit.residuals, 0, atol=1e-14)

    def test_two_point_line(self):
        X = np.array([[1.0, 1.0], [1.0, 2.0]])
        fit = regress.ols(X, np.array([1.0, 3.0]))
        np.testing.assert_allclose(fit.coefficients, [-1.0, 2.0], atol=1e-14)

    def test_singular(self):
        X = np.column_stack([np.ones(10), 2 * np.ones(10)])
        with pytest.raises(SingularDesignError) as info:
            regress.ols(X, np.arange(10.0))
        assert info.value.condition_number > 1e10

    def test_covariance_normalized_by_rows(self, rng):
        X = rng.standard_normal((50, 2))
        fit = regress.ols(X, rng.standard_normal(50))
        assert fit.residual_covariance[0, 0] == pytest.approx(np.sum(fit.residuals**2) / 50)
        assert fit.dof == 48

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 6), st.integers(10, 60))
    def test_normal_equations(self, seed, k, extra):
        r = np.random.default_rng(seed)
        X = r.standard_normal((k + extra, k))
        y = r.standard_normal(k + extra)
        fit = regress.ols(X, y)
        lhs = X.T @ X @ fit.coefficients
        np.testing.assert_allclose(lhs, X.T @ y, rtol=1e-8, atol=1e-8 * np.abs(X.T @ y).max())
        assert np.abs(X.T @ fit.residuals).max() < 1e-8 * np.linalg.norm(X) * np.linalg.norm(y)


class TestSbic:
    def test_single_candidate(self, rng):
        assert regress.select_lag_sbic(rng.standard_normal(100), 1) == 1

    def test_default_p_max(self):
        assert regress.default_p_max(200) == 14
        assert regress.default_p_max(1000) == 21

    def test_white_noise_picks_one(self):
        hits = sum(regress.select_lag_sbic(np.random.default_rng(s).standard_normal(1000), 8) == 1 for s in range(50))
        assert hits >= 45

    def test_ar3_recovered(self):
        spec = dgp.ArpSpec((0.5, -0.3, 0.25))
        hits = sum(regress.select_lag_sbic(dgp.simulate_arp(spec, 10_000, seed=substream(3, s)), 8) == 3 for s in range(20))
        assert hits >= 18

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 1000), st.floats(0.01, 100.0))
    def test_scale_invariant(self, seed, c):
        y = dgp.simulate_arp(dgp.ArpSpec((0.4, 0.2)), 200, seed=seed)
        assert regress.select_lag_sbic(y, 6) == regress.select_lag_sbic(c * y, 6)

    def test_matches_direct_criterion(self, rng):
        y = dgp.simulate_arp(dgp.ArpSpec((0.6, -0.2)), 300, seed=5)
        p_max = 6
        n = y.size - p_max
        crit = []
        for p in range(1, p_max + 1):
            X = np.column_stack([y[p_max - j : y.size - j] for j in range(1, p + 1)])
            beta = np.linalg.solve(X.T @ X, X.T @ y[p_max:])
            s2 = np.mean((y[p_max:] - X @ beta) ** 2)
            crit.append(np.log(s2) + p * np.log(n) / n)
        assert regress.select_lag_sbic(y, p_max) == int(np.argmin(crit)) + 1


class TestFitVar:
    def test_deterministic_recursion(self):
        y = 3.0 * 0.5 ** np.arange(30)
        fit = regress.fit_var(y, 1)
        assert fit.a_hats[0] == pytest.approx(0.5, abs=1e-10)

    def test_consistency(self):
        y = dgp.simulate_ar1(dgp.Ar1Spec(0.9), 100_000, seed=2)
        assert regress.fit_var(y, 1).a_hats[0] == pytest.approx(0.9, abs=0.01)

    def test_centered_residuals(self, rng):
        fit = regress.fit_var(rng.standard_normal(200), 3)
        assert abs(fit.centered_residuals.mean()) < 1e-12
        assert fit.centered_residuals.size == 197

    def test_recovers_arp(self):
        spec = dgp.ArpSpec((0.5, -0.3, 0.25))
        fit = regress.fit_var(dgp.simulate_arp(spec, 100_000, seed=4), 3)
        np.testing.assert_allclose(fit.a_hats, spec.coefficients, atol=0.02)

    def test_bivariate(self):
        A = np.array([[0.5, 0.1], [0.0, 0.3]])
        r = np.random.default_rng(0)
        y = np.zeros((20_000, 2))
        for t in range(1, y.shape[0]):
            y[t] = A @ y[t - 1] + r.standard_normal(2)
        fit = regress.fit_var(y, 1)
        np.testing.assert_allclose(fit.a_hats[0], A, atol=0.03)


class TestDurbin:
    def test_geometric(self):
        np.testing.assert_allclose(regress.durbin_ma_from_ar([0.7], 5), 0.7 ** np.arange(6))

    def test_hand_values(self):
        np.testing.assert_allclose(regress.durbin_ma_from_ar([0.5, 0.3], 3), [1, 0.5, 0.55, 0.425], atol=1e-15)

    def test_zero(self):
        np.testing.assert_array_equal(regress.durbin_ma_from_ar([0.0, 0.0], 4), [1, 0, 0, 0, 0])

    def test_matrix_identity_start(self):
        B = regress.durbin_ma_from_ar(np.zeros((2, 3, 3)), 2)
        np.testing.assert_array_equal(B[0], np.eye(3))

    def test_matrix_against_companion(self, rng):
        A = rng.uniform(-0.3, 0.3, size=(2, 2, 2))
        comp = np.block([[A[0], A[1]], [np.eye(2), np.zeros((2, 2))]])
        B = regress.durbin_ma_from_ar(A, 10)
        M = np.eye(4)
        for h in range(11):
            np.testing.assert_allclose(B[h], M[:2, :2], atol=1e-13)
            M = comp @ M

    @settings(max_examples=100, deadline=None)
    @given(arrays(np.float64, st.integers(1, 10), elements=st.floats(-0.3, 0.3)), st.integers(0, 200))
    def test_impulse_propagation(self, a, s):
        if dgp.spectral_radius(a) >= 1:
            return
        np.testing.assert_allclose(regress.durbin_ma_from_ar(a, s), impulse_propagation(a, s), atol=1e-12, rtol=0)
