"""Autocorrelation, Toeplitz eigenstructure, PSD, and the reference solve."""

import numpy as np
import pytest

from adaptid.errors import (
    DegenerateSpectrumError,
    InvalidArgumentError,
    SingularMatrixError,
)
from adaptid.signals import RngStream, color, gen_four_level, standard_lpf_8tap
from adaptid.spectral import (
    AutocorrSeq,
    autocorr_estimate,
    convergence_estimate,
    psd_from_autocorr,
    sym_eigenvalues,
    toeplitz_from_autocorr,
    wiener_solution,
)
from adaptid.sysid import Plant, plant_response

from conftest import eigenvalues_by_bisection


class TestAutocorrEstimate:
    def test_zero_signal(self):
        r = autocorr_estimate(np.zeros(100), 4)
        assert np.array_equal(r.lags, np.zeros(4))
        assert r.sample_count == 100

    def test_white_four_level(self):
        x = gen_four_level(10**6, RngStream(21))
        r = autocorr_estimate(x, 4)
        assert r.lags[0] == pytest.approx(5.0, abs=0.05)
        assert np.all(np.abs(r.lags[1:]) < 0.05)

    def test_colored_matches_filtered_white_autocorr(self):
        # oracle: analytic FIR-filtered-white-noise autocorrelation
        # r'(t) = power * sum_k h(k) h(k+t)
        taps = standard_lpf_8tap()
        x = color(gen_four_level(10**6, RngStream(22)), taps)
        r = autocorr_estimate(x, 4)
        power = 5.0 * np.sum(taps * taps)
        for t in range(4):
            expected = 5.0 * np.sum(taps[: taps.size - t] * taps[t:])
            # near-zero lags need an absolute floor on top of the 5% band
            assert abs(r.lags[t] - expected) <= max(0.05 * abs(expected), 0.005 * power)

    def test_lag_bound_property(self):
        for seed in range(5):
            x = gen_four_level(2000, RngStream(seed))
            r = autocorr_estimate(x, 8)
            assert r.lags[0] >= 0.0
            assert np.all(np.abs(r.lags) <= r.lags[0] + 1e-12)

    def test_max_lag_too_large(self):
        with pytest.raises(InvalidArgumentError):
            autocorr_estimate(np.ones(10), 10)


class TestToeplitz:
    def test_white_case_scaled_identity(self):
        r = AutocorrSeq(lags=np.array([5.0, 0.0, 0.0, 0.0]), sample_count=100)
        assert np.array_equal(toeplitz_from_autocorr(r, 4), 5.0 * np.eye(4))

    def test_direct_placement(self):
        r = AutocorrSeq(lags=np.array([1.0, 0.5]), sample_count=10)
        assert np.array_equal(toeplitz_from_autocorr(r, 2), [[1.0, 0.5], [0.5, 1.0]])

    def test_order_one(self):
        r = AutocorrSeq(lags=np.array([2.5]), sample_count=10)
        assert np.array_equal(toeplitz_from_autocorr(r, 1), [[2.5]])

    def test_symmetry_and_diagonal_constancy(self):
        x = gen_four_level(5000, RngStream(3))
        m = toeplitz_from_autocorr(autocorr_estimate(x, 6), 6)
        assert np.array_equal(m, m.T)
        for k in range(6):
            diag = np.diagonal(m, offset=k)
            assert np.all(diag == diag[0])

    def test_order_exceeding_lags(self):
        r = AutocorrSeq(lags=np.array([1.0, 0.5]), sample_count=10)
        with pytest.raises(InvalidArgumentError):
            toeplitz_from_autocorr(r, 3)


class TestSymEigenvalues:
    def test_scalar_matrix(self):
        assert np.allclose(sym_eigenvalues(5.0 * np.eye(4)), [5, 5, 5, 5])

    def test_hand_two_by_two(self):
        # characteristic polynomial lambda^2 - 2 lambda + 0.75 -> 0.5, 1.5
        eigs = sym_eigenvalues([[1.0, 0.5], [0.5, 1.0]])
        assert np.allclose(eigs, [0.5, 1.5], atol=1e-12)

    def test_against_bisection_oracle(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            a = rng.normal(size=(6, 6))
            a = 0.5 * (a + a.T)
            got = sym_eigenvalues(a)
            want = eigenvalues_by_bisection(a)
            assert np.allclose(got, want, atol=1e-8)

    def test_trace_identity(self):
        rng = np.random.default_rng(5)
        a = rng.normal(size=(8, 8))
        a = a @ a.T
        eigs = sym_eigenvalues(a)
        assert np.sum(eigs) == pytest.approx(np.trace(a), rel=1e-9)

    def test_ascending_order(self):
        rng = np.random.default_rng(8)
        a = rng.normal(size=(7, 7))
        a = 0.5 * (a + a.T)
        eigs = sym_eigenvalues(a)
        assert np.all(np.diff(eigs) >= 0.0)

    def test_asymmetric_rejected(self):
        with pytest.raises(InvalidArgumentError):
            sym_eigenvalues([[1.0, 2.0], [0.0, 1.0]])


class TestPsd:
    def test_white_flat(self):
        r = AutocorrSeq(lags=np.array([5.0, 0.0, 0.0, 0.0]), sample_count=100)
        psd = psd_from_autocorr(r, 64)
        assert np.allclose(psd.values, 5.0)

    def test_zero_lags(self):
        r = AutocorrSeq(lags=np.zeros(4), sample_count=10)
        assert np.all(psd_from_autocorr(r, 16).values == 0.0)

    def test_cosine_series_hand_values(self):
        r = AutocorrSeq(lags=np.array([1.0, 0.5]), sample_count=10)
        psd = psd_from_autocorr(r, 4096)
        assert np.allclose(psd.values, 1.0 + np.cos(psd.omega), atol=1e-12)
        assert psd.values[0] == pytest.approx(2.0)
        assert psd.values[-1] == pytest.approx(0.0, abs=1e-12)

    def test_grid_increasing_over_half_axis(self):
        r = AutocorrSeq(lags=np.array([1.0]), sample_count=10)
        psd = psd_from_autocorr(r, 100)
        assert psd.omega[0] == 0.0
        assert psd.omega[-1] == pytest.approx(np.pi)
        assert np.all(np.diff(psd.omega) > 0.0)


class TestConvergenceEstimate:
    def test_white_case(self):
        est = convergence_estimate([5.0, 5.0, 5.0, 5.0], 0.045)
        assert est.tau == pytest.approx(1.0 / (0.045 * 5.0))
        assert est.disparity == 1.0
        assert est.mu_bound == pytest.approx(0.2)

    def test_substitution(self):
        est = convergence_estimate([0.5, 1.5], 0.1)
        assert est.tau == pytest.approx(20.0)
        assert est.disparity == pytest.approx(3.0)

    def test_disparity_at_least_one(self):
        est = convergence_estimate([2.0, 2.0], 1.0)
        assert est.disparity == 1.0

    def test_nonpositive_eigenvalue_rejected(self):
        with pytest.raises(DegenerateSpectrumError):
            convergence_estimate([0.0, 1.0], 0.1)


class TestEigenvaluePsdBounds:
    def test_eigenvalues_inside_truncated_psd_range(self):
        # classical Toeplitz bound: every eigenvalue lies between the
        # extremes of the matrix symbol (the truncated-lag PSD)
        taps = standard_lpf_8tap()
        for seed in range(8):
            x = gen_four_level(20_000, RngStream(seed))
            if seed % 2:
                x = color(x, taps)
            for order in (2, 4, 8):
                r = autocorr_estimate(x, order)
                eigs = sym_eigenvalues(toeplitz_from_autocorr(r, order))
                psd = psd_from_autocorr(r, 8192)
                assert eigs[0] >= psd.values.min() - 1e-6
                assert eigs[-1] <= psd.values.max() + 1e-6

    def test_colored_disparity_exceeds_white(self):
        for seed in (1, 2, 3):
            x = gen_four_level(100_000, RngStream(seed))
            rw = autocorr_estimate(x, 4)
            rc = autocorr_estimate(color(x, standard_lpf_8tap()), 4)
            dw = convergence_estimate(sym_eigenvalues(toeplitz_from_autocorr(rw, 4)), 1.0).disparity
            dc = convergence_estimate(sym_eigenvalues(toeplitz_from_autocorr(rc, 4)), 1.0).disparity
            assert dc > dw

    def test_trace_equals_order_times_r0(self):
        x = gen_four_level(10_000, RngStream(9))
        r = autocorr_estimate(x, 4)
        eigs = sym_eigenvalues(toeplitz_from_autocorr(r, 4))
        assert np.sum(eigs) == pytest.approx(4 * r.lags[0], rel=1e-9)


class TestWienerSolution:
    def test_identity_plant(self):
        x = gen_four_level(1000, RngStream(1))
        c = wiener_solution(x, x, 1)
        assert c[0] == pytest.approx(1.0, abs=1e-12)

    def test_pure_delay(self):
        x = gen_four_level(50_000, RngStream(2))
        d = np.zeros_like(x)
        d[1:] = x[:-1]
        c = wiener_solution(x, d, 2)
        assert np.allclose(c, [0.0, 1.0], atol=1e-2)

    def test_matches_plant_and_lstsq_oracle(self):
        x = gen_four_level(100_000, RngStream(3))
        plant = Plant.fir([0.03, 0.24, 0.54, 0.8])
        d = plant_response(plant, x)
        c = wiener_solution(x, d, 4)
        assert np.allclose(c, plant.b, atol=1e-2)
        # oracle: independent least-squares solve on the same record
        design = np.zeros((x.size, 4))
        for k in range(4):
            design[k:, k] = x[: x.size - k]
        oracle, *_ = np.linalg.lstsq(design, d, rcond=None)
        assert np.allclose(c, oracle, atol=1e-8)

    def test_residual_orthogonality(self):
        x = gen_four_level(50_000, RngStream(4))
        d = plant_response(Plant.fir([0.03, 0.24, 0.54, 0.8]), x)
        c = wiener_solution(x, d, 4)
        design = np.zeros((x.size, 4))
        for k in range(4):
            design[k:, k] = x[: x.size - k]
        resid = d - design @ c
        r0 = np.mean(x * x)
        cross = design.T @ resid / x.size
        assert np.all(np.abs(cross) < 1e-6 * r0)

    def test_singular_matrix_rejected(self):
        x = np.zeros(100)
        x[0] = 1.0  # a single impulse leaves most lags unexcited
        with pytest.raises(SingularMatrixError):
            wiener_solution(np.zeros(100), np.zeros(100), 2)

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            wiener_solution(np.ones(10), np.ones(9), 2)
