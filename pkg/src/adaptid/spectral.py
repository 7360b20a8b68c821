"""Input-statistics analysis: autocorrelation, Toeplitz eigenstructure, PSD.

Predicts adaptive-filter convergence behavior from the training signal:
eigenvalue disparity of the lag-autocorrelation Toeplitz matrix, the
step-size stability bound, and the reference least-squares weight vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateSpectrumError, InvalidArgumentError, SingularMatrixError
from .signals import as_signal

_JACOBI_TOL = 1e-12
_COND_LIMIT = 1e12


@dataclass(frozen=True)
class AutocorrSeq:
    """Estimated autocorrelation lags r(0..T-1) and the record length used."""

    lags: np.ndarray
    sample_count: int


@dataclass(frozen=True)
class PsdCurve:
    """Power spectral density samples on a uniform grid over [0, pi]."""

    omega: np.ndarray
    values: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("omega,X\n")
            for w, v in zip(self.omega, self.values):
                fh.write(f"{float(w)!r},{float(v)!r}\n")


@dataclass(frozen=True)
class ConvergenceEstimate:
    """Convergence prediction from the eigenvalue extremes of the input."""

    lambda_min: float
    lambda_max: float
    disparity: float
    tau: float
    mu_bound: float


def autocorr_estimate(x, max_lag: int) -> AutocorrSeq:
    """Biased time-average autocorrelation over lags 0..max_lag-1.

    r(t) = (1/len) sum_n x(n) x(n-t).  Dividing by the full record length
    (not len-t) keeps every Toeplitz matrix built from these lags positive
    semidefinite.
    """
    x = as_signal(x, "x")
    if max_lag < 1:
        raise InvalidArgumentError("max_lag must be >= 1")
    if max_lag >= x.size:
        raise InvalidArgumentError(
            f"max_lag ({max_lag}) must be smaller than the record length ({x.size})"
        )
    n = x.size
    lags = np.array([np.dot(x[t:], x[: n - t]) / n for t in range(max_lag)])
    return AutocorrSeq(lags=lags, sample_count=n)


def toeplitz_from_autocorr(r: AutocorrSeq, order: int) -> np.ndarray:
    """Symmetric Toeplitz matrix M[i][j] = r(|i-j|) of the given order."""
    lags = np.asarray(r.lags, dtype=np.float64)
    if order < 1:
        raise InvalidArgumentError("order must be >= 1")
    if order > lags.size:
        raise InvalidArgumentError(
            f"order ({order}) exceeds available lags ({lags.size})"
        )
    idx = np.abs(np.subtract.outer(np.arange(order), np.arange(order)))
    return lags[idx]


def sym_eigenvalues(matrix) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, ascending.

    Cyclic Jacobi rotations; sweeps stop once the off-diagonal norm falls
    below 1e-12 of the Frobenius norm.  Intended for the small orders used
    here (N <= 64).
    """
    a = np.array(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidArgumentError("matrix must be square")
    if not np.all(np.isfinite(a)):
        raise InvalidArgumentError("matrix entries must be finite")
    scale = np.linalg.norm(a)
    if np.linalg.norm(a - a.T) > 1e-10 * max(scale, 1.0):
        raise InvalidArgumentError("matrix is not symmetric within tolerance")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    if n == 1:
        return a[0, :1].copy()
    frob = np.linalg.norm(a)
    if frob == 0.0:
        return np.zeros(n)
    for _ in range(100):
        off = np.sqrt(max(frob**2 - np.sum(np.diag(a) ** 2), 0.0))
        if off < _JACOBI_TOL * frob:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < _JACOBI_TOL * frob / n:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / apq
                t = np.sign(theta) / (abs(theta) + np.hypot(1.0, theta))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
                a[p, q] = a[q, p] = 0.0
    return np.sort(np.diag(a))


def psd_from_autocorr(r: AutocorrSeq, grid_size: int = 4096) -> PsdCurve:
    """PSD as the cosine series of the (symmetric, truncated) lag sequence.

    X(w) = r(0) + 2 sum_{t>=1} r(t) cos(w t), evaluated on a uniform grid
    over [0, pi].  Real lags make the spectrum even, so the half-axis grid
    carries all the information.
    """
    if grid_size < 2:
        raise InvalidArgumentError("grid_size must be >= 2")
    lags = np.asarray(r.lags, dtype=np.float64)
    omega = np.linspace(0.0, np.pi, grid_size)
    t = np.arange(1, lags.size)
    values = lags[0] + 2.0 * np.cos(np.outer(omega, t)) @ lags[1:] if lags.size > 1 else np.full(grid_size, lags[0])
    return PsdCurve(omega=omega, values=np.asarray(values, dtype=np.float64))


def convergence_estimate(eigs, mu: float) -> ConvergenceEstimate:
    """Predicted adaptation time constant and stability headroom.

    tau = 1/(mu * lambda_min) iterations; disparity = lambda_max/lambda_min;
    mu_bound = 1/lambda_max.
    """
    eigs = np.asarray(eigs, dtype=np.float64)
    if eigs.size == 0:
        raise DegenerateSpectrumError("no eigenvalues supplied")
    if np.any(eigs <= 0.0) or not np.all(np.isfinite(eigs)):
        raise DegenerateSpectrumError("all eigenvalues must be positive and finite")
    if mu <= 0.0:
        raise InvalidArgumentError("mu must be positive")
    lam_min = float(eigs.min())
    lam_max = float(eigs.max())
    return ConvergenceEstimate(
        lambda_min=lam_min,
        lambda_max=lam_max,
        disparity=lam_max / lam_min,
        tau=1.0 / (mu * lam_min),
        mu_bound=1.0 / lam_max,
    )


def _lagged_design(x: np.ndarray, order: int) -> np.ndarray:
    """Design matrix of zero-padded lagged copies: column k is x(n-k)."""
    cols = np.zeros((x.size, order))
    for k in range(order):
        cols[k:, k] = x[: x.size - k]
    return cols


def wiener_solution(x, d, order: int) -> np.ndarray:
    """Least-squares reference weights from the normal equations.

    Estimates R = (1/len) sum_n X(n) X(n)^T and P(k) = (1/len) sum_n
    d(n) x(n-k) on the zero-padded record and solves R C = P by Cholesky
    factorization.  Raises when the estimated R is ill-conditioned
    (eigenvalue-ratio condition estimate above 1e12).
    """
    x = as_signal(x, "x")
    d = as_signal(d, "d")
    if x.size != d.size:
        raise InvalidArgumentError("x and d must have equal length")
    if order < 1 or order > x.size:
        raise InvalidArgumentError("order must be in [1, len(x)]")
    design = _lagged_design(x, order)
    r_mat = design.T @ design / x.size
    p_vec = design.T @ d / x.size
    eigs = sym_eigenvalues(r_mat)
    if eigs[0] <= 0.0 or eigs[-1] / eigs[0] > _COND_LIMIT:
        raise SingularMatrixError(
            "estimated autocorrelation matrix is singular or ill-conditioned"
        )
    chol = scipy.linalg.cho_factor(r_mat)
    return scipy.linalg.cho_solve(chol, p_vec)


def eigenvalues_to_csv(eigs, path) -> None:
    """Write eigenvalues as CSV with header ``i,lambda``."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("i,lambda\n")
        for i, v in enumerate(np.asarray(eigs, dtype=np.float64)):
            fh.write(f"{i},{float(v)!r}\n")


def autocorr_to_csv(r: AutocorrSeq, path) -> None:
    """Write autocorrelation lags as CSV with header ``t,r``."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("t,r\n")
        for t, v in enumerate(r.lags):
            fh.write(f"{t},{float(v)!r}\n")
