"""Recursive filter: output recursion, sensitivity gradients, pole guard."""

import numpy as np
import pytest

from adaptid.adaptive_fir import LmsRunConfig, run_fir_lms
from adaptid.adaptive_iir import (
    IirFilterState,
    iir_gradient_step,
    iir_output,
    pole_radii,
    run_iir_lms,
    stabilize_poles,
)
from adaptid.errors import DivergenceError
from adaptid.signals import RngStream, gen_four_level
from adaptid.sysid import Plant, plant_response

from conftest import iir_response_oracle


def _stable_random_filter(rng, m, l):
    """Random coefficients with feedback poles inside radius 0.9."""
    b = rng.uniform(-1.0, 1.0, size=m + 1)
    if l == 0:
        return b, np.empty(0)
    if l == 1:
        return b, np.array([rng.uniform(-0.9, 0.9)])
    radius = rng.uniform(0.2, 0.9)
    angle = rng.uniform(0.2, np.pi - 0.2)
    # conjugate pole pair -> a1 = 2 r cos(theta), a2 = -r^2
    return b, np.array([2 * radius * np.cos(angle), -(radius**2)])


class TestIirOutput:
    def test_reduces_to_fir_with_zero_feedback(self):
        x = gen_four_level(200, RngStream(1))
        b = np.array([0.5, -0.25, 0.125])
        state = IirFilterState.with_coefficients(b, [])
        ys = np.array([iir_output(state, s) for s in x])
        assert np.allclose(ys, np.convolve(x, b)[: x.size], rtol=1e-12, atol=1e-12)

    def test_geometric_impulse_response(self):
        state = IirFilterState.with_coefficients([0.6], [0.2])
        impulse = np.zeros(10)
        impulse[0] = 1.0
        ys = np.array([iir_output(state, s) for s in impulse])
        assert np.allclose(ys, 0.6 * 0.2 ** np.arange(10), rtol=1e-12)

    def test_two_step_hand_recursion(self):
        state = IirFilterState.with_coefficients([0.6], [0.2])
        assert iir_output(state, 1.0) == pytest.approx(0.6)
        assert iir_output(state, 0.0) == pytest.approx(0.12)

    def test_matches_direct_recursion_oracle(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=100)
        b = np.array([0.3, -0.2, 0.1])
        a = np.array([0.5, -0.3])
        state = IirFilterState.with_coefficients(b, a)
        ys = np.array([iir_output(state, s) for s in x])
        assert np.allclose(ys, iir_response_oracle(b, a, x), rtol=1e-10, atol=1e-12)


class TestStabilizePoles:
    def test_stable_unchanged(self):
        a = np.array([0.2])
        assert np.array_equal(stabilize_poles(a), a)

    def test_scalar_clamp_preserves_sign(self):
        assert stabilize_poles([1.2])[0] == pytest.approx(0.99)
        assert stabilize_poles([-1.2])[0] == pytest.approx(-0.99)

    def test_conjugate_pair_rescaled(self):
        # oracle: quadratic roots, rescale, re-expand by hand
        radius, angle = 1.1, np.pi / 4
        a = np.array([2 * radius * np.cos(angle), -(radius**2)])
        fixed = stabilize_poles(a)
        assert fixed[0] == pytest.approx(2 * 0.99 * np.cos(angle))
        assert fixed[1] == pytest.approx(-(0.99**2))
        assert np.all(pole_radii(fixed) <= 0.99 + 1e-12)

    def test_third_order(self):
        a = np.array([1.5, 0.2, -0.9])
        fixed = stabilize_poles(a)
        assert np.all(pole_radii(fixed) <= 0.99 + 1e-12)

    def test_empty_feedback(self):
        assert stabilize_poles(np.empty(0)).size == 0


class TestGradientRecursions:
    def test_hand_unrolled_alpha(self):
        # a1 = 0.5, x = [1, 1]: alpha_0(0) = 1, alpha_0(1) = 1 + 0.5 * 1 = 1.5
        state = IirFilterState.with_coefficients([0.0], [0.5])
        state, _, _ = iir_gradient_step(state, 1.0, 0.0, 0.0)
        assert state.alpha[0, 0] == 1.0
        state, _, _ = iir_gradient_step(state, 1.0, 0.0, 0.0)
        assert state.alpha[0, 0] == 1.5

    def test_collapses_to_fir_regressor_without_feedback(self):
        state = IirFilterState.with_coefficients([0.1, 0.2], [])
        x = gen_four_level(20, RngStream(3))
        for s in x:
            state, _, _ = iir_gradient_step(state, s, 0.0, 0.0)
        # alpha_k(n) = x(n-k) exactly
        assert state.alpha.shape == (2, 0)

    def test_sensitivities_match_finite_differences(self):
        # frozen-coefficient oracle: rerun the filter from n=0 with each
        # coefficient perturbed and compare the central difference of the
        # output sequence against the recursion's alpha/beta states
        rng = np.random.default_rng(10)
        for trial in range(20):
            m = int(rng.integers(0, 4))
            l = int(rng.integers(1, 3))
            b, a = _stable_random_filter(rng, m, l)
            x = gen_four_level(100, RngStream(1000 + trial))
            state = IirFilterState.with_coefficients(b, a)
            alphas = np.zeros((100, m + 1))
            betas = np.zeros((100, l))
            for n in range(100):
                state, _, _ = iir_gradient_step(state, x[n], 0.0, 0.0)
                alphas[n] = state.alpha[:, 0]
                betas[n] = state.beta[:, 0]
            h = 1e-6
            for k in range(m + 1):
                bp, bm = b.copy(), b.copy()
                bp[k] += h
                bm[k] -= h
                fd = (iir_response_oracle(bp, a, x) - iir_response_oracle(bm, a, x)) / (2 * h)
                err = np.linalg.norm(alphas[:, k] - fd) / max(np.linalg.norm(fd), 1e-12)
                assert err < 1e-4, (trial, "alpha", k)
            for k in range(l):
                ap, am = a.copy(), a.copy()
                ap[k] += h
                am[k] -= h
                fd = (iir_response_oracle(b, ap, x) - iir_response_oracle(b, am, x)) / (2 * h)
                err = np.linalg.norm(betas[:, k] - fd) / max(np.linalg.norm(fd), 1e-12)
                assert err < 1e-4, (trial, "beta", k)


class TestRunIirLms:
    def test_identifies_first_order_plant(self):
        x = gen_four_level(10_000, RngStream(1))
        d = plant_response(Plant.iir([0.6], [0.2]), x)
        for mu in (0.04, 0.06, 0.1):
            cfg = LmsRunConfig(mu=mu, max_iterations=10_000)
            report = run_iir_lms(x, d, 0, 1, cfg)
            assert abs(report.final_weights["b"][0] - 0.6) < 1e-4, mu
            assert abs(abs(report.final_weights["a"][0]) - 0.2) < 1e-4, mu
            assert report.final_mse_db <= -140.0
            assert report.max_pole_radius <= 0.99 + 1e-12

    def test_feedback_sign_convention_positive(self):
        # output recursion y(n) = ... + a1 y(n-1) recovers a1 = +0.2
        x = gen_four_level(10_000, RngStream(2))
        d = plant_response(Plant.iir([0.6], [0.2]), x)
        report = run_iir_lms(x, d, 0, 1, LmsRunConfig(mu=0.06, max_iterations=10_000))
        assert report.final_weights["a"][0] == pytest.approx(0.2, abs=1e-4)

    def test_zero_iterations(self):
        x = gen_four_level(100, RngStream(1))
        report = run_iir_lms(x, x, 0, 1, LmsRunConfig(mu=0.05, max_iterations=0))
        assert report.curve_eps2.size == 0
        assert np.array_equal(report.final_weights["b"], [0.0])

    def test_fir_consistency_bit_identical(self):
        # with L = 0 the recursive update algebra coincides with plain LMS
        x = gen_four_level(2000, RngStream(4))
        d = plant_response(Plant.fir([0.03, 0.24, 0.54, 0.8]), x)
        cfg = LmsRunConfig(mu=0.02, max_iterations=2000, convergence_threshold_db=None)
        fir = run_fir_lms(x, d, 4, cfg)
        iir = run_iir_lms(x, d, 3, 0, cfg)
        assert np.array_equal(fir.final_weights, iir.final_weights["b"])
        assert np.array_equal(fir.curve_eps2, iir.curve_eps2)

    def test_poles_never_leave_limit_radius(self):
        # replay adaptation stepwise and check every post-step pole; a run
        # that eventually blows up still satisfies the bound on every
        # completed step
        x = gen_four_level(3000, RngStream(5))
        d = plant_response(Plant.iir([0.6], [0.2]), x)
        for mu in (0.06, 0.1):
            state = IirFilterState.zeros(0, 1)
            for n in range(3000):
                try:
                    state, _, _ = iir_gradient_step(state, x[n], d[n], mu)
                except DivergenceError:
                    break
                assert np.max(pole_radii(state.a)) <= 0.99 + 1e-12

    def test_divergence_carries_iteration(self):
        x = gen_four_level(20_000, RngStream(3))
        d = plant_response(Plant.iir([0.6], [0.2]), x)
        with pytest.raises(DivergenceError) as excinfo:
            run_iir_lms(x, d, 0, 1, LmsRunConfig(mu=0.15, max_iterations=20_000))
        assert excinfo.value.iteration >= 0
