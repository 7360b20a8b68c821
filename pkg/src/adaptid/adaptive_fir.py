"""Transversal (tapped-delay-line) adaptive filter with the LMS update."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._curve import CurveTracker
from .errors import DivergenceError, InvalidArgumentError, InvalidSampleError
from .signals import as_signal


@dataclass
class FirFilterState:
    """Weight vector and delay line (newest sample first)."""

    weights: np.ndarray
    delay_line: np.ndarray

    @classmethod
    def zeros(cls, order: int) -> "FirFilterState":
        if order < 1:
            raise InvalidArgumentError("order must be >= 1")
        return cls(weights=np.zeros(order), delay_line=np.zeros(order))

    @classmethod
    def with_weights(cls, weights) -> "FirFilterState":
        w = as_signal(weights, "weights")
        if w.size < 1:
            raise InvalidArgumentError("weights must be non-empty")
        return cls(weights=w.copy(), delay_line=np.zeros(w.size))


@dataclass
class LmsRunConfig:
    """Knobs for an adaptive run.

    ``convergence_threshold_db = None`` disables early stopping, so the run
    covers the whole record (used to expose the steady-state plateau).
    """

    mu: float
    max_iterations: int
    convergence_threshold_db: float | None = -140.0
    mse_window: int = 8
    hold: int = 8

    def __post_init__(self):
        if self.mu < 0 or not math.isfinite(self.mu):
            raise InvalidArgumentError("mu must be finite and >= 0")
        if self.max_iterations < 0:
            raise InvalidArgumentError("max_iterations must be >= 0")
        if self.mse_window < 1:
            raise InvalidArgumentError("mse_window must be >= 1")
        if self.hold < 1:
            raise InvalidArgumentError("hold must be >= 1")


def lms_step(state: FirFilterState, x_new: float, d: float, mu: float):
    """One LMS iteration; returns ``(state, y, eps)``.

    Shifts the delay line, computes the output with the pre-update weights,
    then applies C <- C + 2 mu eps X.
    """
    if not (math.isfinite(x_new) and math.isfinite(d)):
        raise InvalidSampleError("input and desired samples must be finite")
    if not math.isfinite(mu):
        raise InvalidSampleError("mu must be finite")
    line = state.delay_line
    line[1:] = line[:-1]
    line[0] = x_new
    y = float(np.dot(state.weights, line))
    eps = d - y
    if mu != 0.0:
        with np.errstate(over="ignore", invalid="ignore"):
            step = 2.0 * mu * eps
            state.weights += step * line
        if not np.all(np.isfinite(state.weights)):
            raise DivergenceError("weight vector left the finite range", iteration=-1)
    return state, y, eps


def mu_stability_bound(lambda_max: float) -> float:
    """Largest mean-convergent step size, 1/lambda_max."""
    if lambda_max <= 0 or not math.isfinite(lambda_max):
        raise InvalidArgumentError("lambda_max must be positive and finite")
    return 1.0 / lambda_max


def run_fir_lms(x, d, order: int, cfg: LmsRunConfig, initial_weights=None):
    """Adapt an order-``order`` transversal filter over the record.

    Stops at sustained convergence (threshold + hold) or after
    ``cfg.max_iterations`` samples; raises :class:`DivergenceError` when the
    windowed error power blows up.  Returns an
    :class:`~adaptid.sysid.ExperimentReport`.
    """
    from .sysid import ExperimentReport

    x = as_signal(x, "x")
    d = as_signal(d, "d")
    if x.size != d.size:
        raise InvalidArgumentError("x and d must have equal length")
    if x.size < order:
        raise InvalidArgumentError("record shorter than the filter order")
    if initial_weights is None:
        state = FirFilterState.zeros(order)
    else:
        state = FirFilterState.with_weights(initial_weights)
        if state.weights.size != order:
            raise InvalidArgumentError("initial_weights length must equal order")

    tracker = CurveTracker(cfg.mse_window, cfg.convergence_threshold_db, cfg.hold)
    n_iter = min(x.size, cfg.max_iterations)
    for n in range(n_iter):
        try:
            state, _, eps = lms_step(state, x[n], d[n], cfg.mu)
        except DivergenceError:
            raise DivergenceError("weight vector left the finite range", iteration=n)
        if tracker.push(eps):
            break
    return ExperimentReport(
        curve_eps2=np.asarray(tracker.eps2),
        curve_mse_db=np.asarray(tracker.db),
        converged_at=tracker.converged_at,
        final_weights=state.weights.copy(),
        final_mse_db=tracker.final_mse_db,
    )
