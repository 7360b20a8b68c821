"""Shared fixtures and independent oracle implementations.

The oracles here deliberately avoid the library's own code paths: the
eigenvalue oracle brackets roots of the characteristic polynomial through
matrix inertia, filter outputs are re-derived by direct convolution or
re-simulation, and error surfaces come from closed-form impulse-response
matching.
"""

from __future__ import annotations

import numpy as np
import pytest

from adaptid.signals import RngStream, gen_four_level
from adaptid.sysid import Plant, plant_response


def count_eigs_below(matrix: np.ndarray, shift: float) -> int:
    """Eigenvalues of a symmetric matrix below ``shift``, via inertia.

    Gaussian elimination without pivoting on (A - shift I); by Sylvester's
    law the number of negative pivots equals the number of eigenvalues
    below the shift.
    """
    work = matrix - shift * np.eye(matrix.shape[0])
    negatives = 0
    n = work.shape[0]
    for k in range(n):
        pivot = work[k, k]
        if pivot == 0.0:
            pivot = 1e-300
        if pivot < 0.0:
            negatives += 1
        if k + 1 < n:
            work[k + 1 :, k + 1 :] -= np.outer(work[k + 1 :, k], work[k, k + 1 :]) / pivot
    return negatives


def eigenvalues_by_bisection(matrix: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """All eigenvalues of a symmetric matrix by inertia bisection."""
    a = np.asarray(matrix, dtype=np.float64)
    n = a.shape[0]
    radius = np.sum(np.abs(a), axis=1)
    lo = float(np.min(np.diag(a) - radius)) - 1.0
    hi = float(np.max(np.diag(a) + radius)) + 1.0
    out = np.empty(n)
    for i in range(n):
        left, right = lo, hi
        while right - left > tol * max(1.0, abs(left), abs(right)):
            mid = 0.5 * (left + right)
            if count_eigs_below(a, mid) >= i + 1:
                right = mid
            else:
                left = mid
        out[i] = 0.5 * (left + right)
    return out


def iir_response_oracle(b, a, x) -> np.ndarray:
    """Direct recursion y(n) = sum b_k x(n-k) + sum a_k y(n-k), zero state."""
    b = np.asarray(b, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    y = np.zeros(len(x))
    for n in range(len(x)):
        acc = 0.0
        for k in range(b.size):
            if n - k >= 0:
                acc += b[k] * x[n - k]
        for k in range(1, a.size + 1):
            if n - k >= 0:
                acc += a[k - 1] * y[n - k]
        y[n] = acc
    return y


@pytest.fixture
def white_record():
    """A 4000-sample four-level record with its 4-tap plant output."""
    x = gen_four_level(4000, RngStream(101))
    d = plant_response(Plant.fir([0.03, 0.24, 0.54, 0.8]), x)
    return x, d
