import math

import numpy as np
import pytest

from npgq import (
    DegenerateDataError,
    InputError,
    KernelDensity,
    fit_gaussian_mle,
    gauss_hermite_discretize,
    kde_pdf,
    maxent_discretize,
    maxent_dual,
    maxent_grid,
    maxent_solve,
    sample_moments,
    standardize,
)
from npgq.baselines import _solve_dual
from npgq.experiments import DEFAULT_MIXTURE, replication_rng, sample_mixture

PHI0 = 1.0 / math.sqrt(2.0 * math.pi)


class TestGaussianMle:
    def test_symmetric_two_point(self):
        assert fit_gaussian_mle([-1.0, 1.0]) == pytest.approx((0.0, 1.0))

    def test_hand_computation(self):
        # mean 1, population variance (1+1+1+9)/4 = 3
        mean, std = fit_gaussian_mle([0.0, 0.0, 0.0, 4.0])
        assert mean == pytest.approx(1.0)
        assert std == pytest.approx(math.sqrt(3.0))

    def test_constant_data_rejected(self):
        with pytest.raises(DegenerateDataError):
            fit_gaussian_mle([2.0] * 5)


class TestGaussHermite:
    def test_three_nodes_on_unit_data(self):
        dist = gauss_hermite_discretize([-1.0, 1.0], 3)
        root = math.sqrt(3.0)
        np.testing.assert_allclose(dist.nodes, [-root, 0.0, root], atol=1e-13)
        np.testing.assert_allclose(dist.weights, [1 / 6, 2 / 3, 1 / 6], rtol=1e-13)

    def test_single_node_is_mean(self):
        dist = gauss_hermite_discretize([1.0, 2.0, 6.0], 1)
        assert dist.nodes[0] == pytest.approx(3.0, rel=1e-14)
        assert dist.weights[0] == pytest.approx(1.0)

    def test_two_nodes_closed_form(self):
        # 2-point rule for N(mean, std^2): nodes mean +/- std, weights 1/2.
        data = [0.0, 1.0, 5.0, 2.0]
        mean, std = fit_gaussian_mle(data)
        dist = gauss_hermite_discretize(data, 2)
        np.testing.assert_allclose(dist.nodes, [mean - std, mean + std], rtol=1e-12)
        np.testing.assert_allclose(dist.weights, [0.5, 0.5], rtol=1e-12)

    def test_symmetry_about_fitted_mean(self):
        rng = np.random.default_rng(5)
        data = rng.standard_normal(300) * 2.1 + 0.4
        mean, _ = fit_gaussian_mle(data)
        for n in range(2, 10):
            dist = gauss_hermite_discretize(data, n)
            centered = np.asarray(dist.nodes) - mean
            np.testing.assert_allclose(centered, -centered[::-1], atol=1e-10)
            np.testing.assert_allclose(dist.weights, dist.weights[::-1], rtol=1e-10)


class TestKernelDensity:
    def test_single_point_at_origin(self):
        kd = KernelDensity(data=(0.0,), bandwidth=1.0)
        assert kde_pdf(kd, 0.0) == pytest.approx(PHI0)

    def test_symmetric_data_symmetric_density(self):
        kd = KernelDensity.fit([-2.0, -1.0, 1.0, 2.0])
        for x in (0.3, 1.1, 2.7):
            assert kde_pdf(kd, x) == pytest.approx(kde_pdf(kd, -x), rel=1e-12)

    def test_tail_bound_by_nearest_kernel(self):
        data = [-1.0, 0.0, 1.0]
        kd = KernelDensity.fit(data)
        x = 8.0
        nearest = min(abs(x - xi) for xi in data)
        bound = math.exp(-0.5 * (nearest / kd.bandwidth) ** 2) * PHI0 / kd.bandwidth
        assert kde_pdf(kd, x) <= bound

    def test_silverman_bandwidth(self):
        rng = np.random.default_rng(2)
        data = rng.standard_normal(500) * 1.7
        kd = KernelDensity.fit(data)
        _, std = fit_gaussian_mle(data)
        assert kd.bandwidth == pytest.approx(1.06 * std * 500 ** (-0.2), rel=1e-12)

    def test_integrates_to_one(self):
        rng = np.random.default_rng(3)
        data = rng.standard_normal(50)
        kd = KernelDensity.fit(data)
        grid = np.linspace(data.min() - 8, data.max() + 8, 20001)
        total = np.trapezoid(kde_pdf(kd, grid), grid)
        assert total == pytest.approx(1.0, abs=1e-6)


class TestMaxentGrid:
    def test_five_point_span(self):
        grid = maxent_grid([-1.0, 1.0], 5)  # mean 0, std 1
        half = math.sqrt(8.0)
        np.testing.assert_allclose(grid, np.linspace(-half, half, 5), rtol=1e-12)
        assert np.allclose(np.diff(grid), np.diff(grid)[0])

    def test_two_point_endpoints(self):
        grid = maxent_grid([-1.0, 1.0], 2)
        np.testing.assert_allclose(grid, [-math.sqrt(2.0), math.sqrt(2.0)], rtol=1e-12)

    def test_midpoint_is_mean(self):
        rng = np.random.default_rng(9)
        data = rng.uniform(3, 9, 101)
        mean, _ = fit_gaussian_mle(data)
        grid = maxent_grid(data, 3)
        assert grid[1] == pytest.approx(mean, rel=1e-12)

    def test_requires_two_points(self):
        with pytest.raises(InputError):
            maxent_grid([-1.0, 1.0], 1)


class TestMaxentDual:
    def test_gradient_vanishes_when_prior_matches_targets(self):
        nodes = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
        prior = np.full(5, 0.2)
        targets = np.array([prior @ nodes, prior @ nodes**2])
        lam, weights, iterations = _solve_dual(nodes, prior, targets)
        assert iterations == 0
        np.testing.assert_array_equal(lam, [0.0, 0.0])
        np.testing.assert_allclose(weights, prior, rtol=1e-14)

    def test_gradient_is_moment_mismatch(self):
        nodes = np.array([-1.5, 0.0, 2.0])
        prior = np.array([0.25, 0.5, 0.25])
        targets = np.array([0.1, 1.2])
        _, grad = maxent_dual([0.0, 0.0], nodes, prior, targets)
        np.testing.assert_allclose(
            grad, [prior @ nodes - 0.1, prior @ nodes**2 - 1.2], rtol=1e-12
        )

    def test_gradient_matches_central_differences(self):
        rng = np.random.default_rng(4)
        for _ in range(5):
            n = int(rng.integers(4, 9))
            nodes = np.sort(rng.uniform(-3, 3, n))
            prior = rng.dirichlet(np.ones(n))
            n_mom = int(rng.integers(2, 5))
            targets = rng.uniform(-0.5, 1.5, n_mom)
            lam = rng.uniform(-0.3, 0.3, n_mom)
            _, grad = maxent_dual(lam, nodes, prior, targets)
            h = 1e-6
            for i in range(n_mom):
                lam_hi, lam_lo = lam.copy(), lam.copy()
                lam_hi[i] += h
                lam_lo[i] -= h
                v_hi, _ = maxent_dual(lam_hi, nodes, prior, targets)
                v_lo, _ = maxent_dual(lam_lo, nodes, prior, targets)
                assert grad[i] == pytest.approx((v_hi - v_lo) / (2 * h), abs=1e-6)


class TestMaxentSolve:
    def test_symmetric_data_two_moment_match(self):
        # N=4 matches two moments; symmetric data keeps the weights symmetric.
        data = np.array([-2.0, -1.0, -0.5, 0.5, 1.0, 2.0])
        sol = maxent_solve(data, 4)
        assert sol.n_matched == 2
        np.testing.assert_allclose(sol.weights, sol.weights[::-1], rtol=1e-9, atol=1e-12)
        mean, std = fit_gaussian_mle(data)
        w = np.asarray(sol.weights)
        x = np.asarray(sol.nodes)
        assert w @ x == pytest.approx(mean, abs=1e-8)
        assert w @ x**2 == pytest.approx(std**2 + mean**2, abs=1e-8)

    def test_four_moment_match_on_mixture_sample(self):
        data = sample_mixture(DEFAULT_MIXTURE, 10_000, replication_rng(55, 10_000, 0))
        sol = maxent_solve(data, 5)
        assert sol.n_matched == 4
        assert not sol.downgraded
        dist = sol.distribution()
        target = sample_moments(data, 4)
        for k in range(1, 5):
            assert abs(dist.moment(k) - target[k]) <= 1e-8 * max(1.0, abs(target[k]))

    def test_weights_positive_and_normalized(self):
        rng = np.random.default_rng(21)
        data = rng.standard_normal(400)
        for n in (3, 5, 7, 9):
            sol = maxent_solve(data, n)
            assert all(w > 0 for w in sol.weights)
            assert sum(sol.weights) == pytest.approx(1.0, abs=1e-12)
            assert all(q > 0 for q in sol.prior)

    def test_dual_optimality_in_standardized_units(self):
        rng = np.random.default_rng(34)
        data = rng.standard_normal(600) * 0.2 + 0.05
        sol = maxent_solve(data, 7)
        transform, z = standardize(data)
        grid_z = transform.to_standardized(np.asarray(sol.nodes))
        targets = np.asarray(sample_moments(z, sol.n_matched).values[1:])
        _, grad = maxent_dual(sol.lam, grid_z, np.asarray(sol.prior), targets)
        assert np.linalg.norm(grad) <= 1e-8

    def test_infeasible_targets_fall_back_to_two_moments(self):
        # Heavy single outlier: the sample kurtosis exceeds what the
        # 5-point grid can represent, so the 4-moment tilt is infeasible.
        data = np.array([0.0] * 400 + [60.0])
        sol = maxent_solve(data, 5)
        assert sol.downgraded
        assert sol.n_matched == 2

    def test_discretize_wrapper(self):
        data = np.array([-2.0, -1.0, 0.0, 1.0, 2.0, 0.5, -0.5])
        dist = maxent_discretize(data, 5)
        assert len(dist) == 5
        assert sum(dist.weights) == pytest.approx(1.0, abs=1e-12)
