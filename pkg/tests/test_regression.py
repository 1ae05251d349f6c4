import numpy as np
import pytest

from netmed.errors import CollinearityError, DimensionError
from netmed.regression import fit_mediator, fit_outcome, fit_outcome_fwl

from conftest import rand_orthogonal


def outcome_oracle(w, x, y):
    """Explicit normal-equation solve and loop-built sandwich pieces."""
    design = np.hstack([w, x])
    n, k = design.shape
    gram_inv = np.linalg.inv(design.T @ design)
    beta = gram_inv @ design.T @ y
    resid = y - design @ beta
    a_mat = design.T @ design / n
    b_mat = np.zeros((k, k))
    for i in range(n):
        row = design[i : i + 1]
        b_mat += resid[i] ** 2 * (row.T @ row)
    b_mat /= n
    a_inv = np.linalg.inv(a_mat)
    return beta, resid, a_mat, b_mat, a_inv @ b_mat @ a_inv.T


def mediator_oracle(w, x):
    """Entrywise loops over the vec(Theta) M-estimator sandwich."""
    n, q = w.shape
    d = x.shape[1]
    theta = np.linalg.inv(w.T @ w) @ w.T @ x
    xi = x - w @ theta
    k = q * d
    a_mat = np.zeros((k, k))
    b_mat = np.zeros((k, k))
    for j in range(d):
        for kk in range(d):
            for a in range(q):
                for c in range(q):
                    row, col = j * q + a, kk * q + c
                    if j == kk:
                        a_mat[row, col] = np.sum(w[:, a] * w[:, c]) / n
                    b_mat[row, col] = np.sum(xi[:, j] * xi[:, kk] * w[:, a] * w[:, c]) / n
    a_inv = np.linalg.inv(a_mat)
    return theta, xi, a_mat, b_mat, a_inv @ b_mat @ a_inv.T


def random_instance(rng, n=30, p=2, d=2):
    t = rng.integers(0, 2, size=n).astype(float)
    c = rng.standard_normal((n, p))
    w = np.column_stack([np.ones(n), t, c])
    x = rng.standard_normal((n, d))
    beta = rng.standard_normal(w.shape[1] + d)
    y = np.hstack([w, x]) @ beta + rng.standard_normal(n)
    return w, x, y


class TestFitOutcome:
    def test_exact_fit_zero_residuals(self):
        w = np.ones((4, 1))
        x = np.array([[1.0], [-1.0], [1.0], [-1.0]])
        y = 2.0 * w[:, 0] + 3.0 * x[:, 0]
        fit = fit_outcome(w, x, y)
        assert np.allclose(fit.beta, [2.0, 3.0], atol=1e-12)
        assert np.allclose(fit.residuals, 0.0, atol=1e-12)
        assert np.allclose(fit.sigma_beta, 0.0, atol=1e-12)

    def test_zero_outcome(self, rng):
        w, x, _ = random_instance(rng)
        fit = fit_outcome(w, x, np.zeros(w.shape[0]))
        assert np.allclose(fit.beta, 0.0, atol=1e-12)

    def test_matches_normal_equation_oracle(self, rng):
        w, x, y = random_instance(rng, n=30, p=2, d=2)
        fit = fit_outcome(w, x, y)
        beta, resid, a_mat, b_mat, sigma = outcome_oracle(w, x, y)
        assert np.max(np.abs(fit.beta - beta)) <= 1e-10
        assert np.max(np.abs(fit.residuals - resid)) <= 1e-10
        assert np.max(np.abs(fit.b_mat - b_mat)) <= 1e-12
        assert np.max(np.abs(fit.a_mat - a_mat)) <= 1e-12
        assert np.max(np.abs(fit.sigma_beta - sigma)) <= 1e-10

    def test_normal_equations_hold(self, rng):
        w, x, y = random_instance(rng, n=50)
        fit = fit_outcome(w, x, y)
        design = np.hstack([w, x])
        assert np.max(np.abs(design.T @ fit.residuals)) <= 1e-6 * np.linalg.norm(y)

    def test_sigma_symmetric_psd(self, rng):
        w, x, y = random_instance(rng, n=40)
        fit = fit_outcome(w, x, y)
        assert np.array_equal(fit.sigma_beta, fit.sigma_beta.T)
        assert np.min(np.linalg.eigvalsh(fit.sigma_beta)) >= -1e-8

    def test_shapes(self, rng):
        w, x, y = random_instance(rng, n=25, p=1, d=3)
        fit = fit_outcome(w, x, y)
        k = w.shape[1] + 3
        assert fit.beta.shape == (k,)
        assert fit.sigma_beta.shape == (k, k)
        assert (fit.n, fit.p, fit.d) == (25, 1, 3)

    def test_hc1_flag_scales(self, rng):
        w, x, y = random_instance(rng, n=30)
        plain = fit_outcome(w, x, y)
        adjusted = fit_outcome(w, x, y, hc1=True)
        k = plain.beta.shape[0]
        assert np.allclose(adjusted.sigma_beta, plain.sigma_beta * 30 / (30 - k))

    def test_collinearity_names_offending_columns(self, rng):
        n = 20
        base = rng.standard_normal(n)
        w = np.column_stack([np.ones(n), base])
        x = np.column_stack([base, rng.standard_normal(n)])  # duplicates column 1
        with pytest.raises(CollinearityError) as excinfo:
            fit_outcome(w, x, rng.standard_normal(n))
        assert 1 in excinfo.value.columns and 2 in excinfo.value.columns

    def test_row_mismatch(self, rng):
        with pytest.raises(DimensionError):
            fit_outcome(np.ones((5, 1)), rng.standard_normal((6, 1)), np.zeros(5))


class TestFitMediator:
    def test_exact_fit(self, rng):
        w = np.column_stack([np.ones(20), rng.standard_normal((20, 2))])
        theta0 = rng.standard_normal((3, 2))
        x = w @ theta0
        fit = fit_mediator(w, x)
        assert np.max(np.abs(fit.theta - theta0)) <= 1e-10
        assert np.max(np.abs(fit.residuals)) <= 1e-10
        assert np.max(np.abs(fit.sigma_theta)) <= 1e-10

    def test_orthogonal_regressors_give_zero_rows(self, rng):
        n = 24
        w = np.column_stack([np.ones(n), rng.standard_normal(n)])
        raw = rng.standard_normal((n, 2))
        # project out the column space of w, so xhat is centered and orthogonal to w
        proj = w @ np.linalg.solve(w.T @ w, w.T @ raw)
        x = raw - proj
        fit = fit_mediator(w, x)
        assert np.max(np.abs(fit.theta)) <= 1e-10

    def test_matches_loop_oracle(self, rng):
        n, p, d = 40, 1, 3
        w = np.column_stack([np.ones(n), rng.integers(0, 2, n).astype(float),
                             rng.standard_normal((n, p))])
        x = w @ rng.standard_normal((p + 2, d)) + rng.standard_normal((n, d))
        fit = fit_mediator(w, x)
        theta, xi, a_mat, b_mat, sigma = mediator_oracle(w, x)
        assert np.max(np.abs(fit.theta - theta)) <= 1e-10
        assert np.max(np.abs(fit.residuals - xi)) <= 1e-10
        assert np.max(np.abs(fit.a_mat - a_mat)) <= 1e-12
        assert np.max(np.abs(fit.b_mat - b_mat)) <= 1e-12
        assert np.max(np.abs(fit.sigma_theta - sigma)) <= 1e-10

    def test_residuals_orthogonal_to_design(self, rng):
        w = np.column_stack([np.ones(30), rng.standard_normal((30, 2))])
        x = rng.standard_normal((30, 2))
        fit = fit_mediator(w, x)
        assert np.max(np.abs(w.T @ fit.residuals)) <= 1e-10

    def test_sigma_shape_and_psd(self, rng):
        w = np.column_stack([np.ones(30), rng.standard_normal((30, 2))])
        x = rng.standard_normal((30, 2))
        fit = fit_mediator(w, x)
        assert fit.sigma_theta.shape == (6, 6)
        assert np.min(np.linalg.eigvalsh(fit.sigma_theta)) >= -1e-8

    def test_collinear_design_rejected(self, rng):
        n = 15
        col = rng.standard_normal(n)
        w = np.column_stack([np.ones(n), col, col])
        with pytest.raises(CollinearityError):
            fit_mediator(w, rng.standard_normal((n, 2)))


class TestFwl:
    def test_matches_fit_outcome(self, rng):
        for _ in range(5):
            w, x, y = random_instance(rng, n=35)
            full = fit_outcome(w, x, y)
            partitioned = fit_outcome_fwl(w, x, y)
            assert np.max(np.abs(partitioned - full.beta_x)) <= 1e-9

    def test_intercept_only_equals_centered_regression(self, rng):
        n = 40
        w = np.ones((n, 1))
        x = rng.standard_normal((n, 1))
        y = 1.5 + 2.5 * x[:, 0] + rng.standard_normal(n)
        beta_x = fit_outcome_fwl(w, x, y)
        xc = x[:, 0] - x[:, 0].mean()
        yc = y - y.mean()
        assert beta_x[0] == pytest.approx(np.sum(xc * yc) / np.sum(xc**2), abs=1e-10)

    def test_outcome_orthogonal_to_design_gives_zero(self, rng):
        n = 30
        w = np.column_stack([np.ones(n), rng.standard_normal(n)])
        x = rng.standard_normal((n, 2))
        design = np.hstack([w, x])
        raw = rng.standard_normal(n)
        y = raw - design @ np.linalg.solve(design.T @ design, design.T @ raw)
        assert np.max(np.abs(fit_outcome_fwl(w, x, y))) <= 1e-9


class TestEquivariance:
    def test_outcome_rotation_equivariance(self, rng):
        w, x, y = random_instance(rng, n=40, d=3)
        q = rand_orthogonal(rng, 3)
        base = fit_outcome(w, x, y)
        rotated = fit_outcome(w, x @ q, y)
        assert np.max(np.abs(rotated.beta_w - base.beta_w)) <= 1e-9
        assert np.max(np.abs(rotated.beta_x - q.T @ base.beta_x)) <= 1e-9
        fitted_base = np.hstack([w, x]) @ base.beta
        fitted_rot = np.hstack([w, x @ q]) @ rotated.beta
        assert np.max(np.abs(fitted_base - fitted_rot)) <= 1e-9

    def test_mediator_rotation_equivariance(self, rng):
        w, x, _ = random_instance(rng, n=40, d=3)
        q = rand_orthogonal(rng, 3)
        base = fit_mediator(w, x)
        rotated = fit_mediator(w, x @ q)
        assert np.max(np.abs(rotated.theta - base.theta @ q)) <= 1e-9


class TestSandwichConsistency:
    def test_matches_empirical_covariance(self):
        # 500 homoskedastic instances at n = 2000: empirical covariance of
        # sqrt(n) (beta_hat - beta) matches the mean sandwich within 15% in
        # spectral norm.
        rng = np.random.default_rng(2024)
        n, p, d = 2000, 1, 2
        beta = np.array([1.0, -0.5, 0.25, 0.8, -1.2])
        scaled_errors = []
        sigmas = []
        for _ in range(500):
            w = np.column_stack([np.ones(n), rng.integers(0, 2, n).astype(float),
                                 rng.standard_normal((n, p))])
            x = rng.standard_normal((n, d))
            y = np.hstack([w, x]) @ beta + rng.standard_normal(n)
            fit = fit_outcome(w, x, y)
            scaled_errors.append(np.sqrt(n) * (fit.beta - beta))
            sigmas.append(fit.sigma_beta)
        empirical = np.cov(np.array(scaled_errors).T)
        mean_sigma = np.mean(sigmas, axis=0)
        gap = np.linalg.norm(empirical - mean_sigma, 2)
        assert gap <= 0.15 * np.linalg.norm(mean_sigma, 2)
