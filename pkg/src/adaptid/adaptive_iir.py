"""Recursive adaptive filter: output feedback, gradient recursions, pole guard.

The filter output is y(n) = sum_k b_k x(n-k) + sum_k a_k y(n-k).  Because
y is recursive, the error gradient w.r.t. each coefficient is itself a
recursion: the sensitivity states alpha_k (for the b's) and beta_k (for the
a's) are filtered versions of the input and output histories.  Adaptation
keeps every feedback pole inside radius 0.99 by rescaling pole magnitudes
while preserving their angles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._curve import CurveTracker
from .errors import DivergenceError, InvalidArgumentError, InvalidSampleError
from .signals import as_signal

POLE_RADIUS_LIMIT = 0.99


@dataclass
class IirFilterState:
    """Coefficients plus delay lines and gradient-recursion histories.

    ``alpha`` holds, per feedforward tap k, the last L sensitivity values
    d y / d b_k; ``beta`` the same per feedback tap.  Newest entries first.
    """

    b: np.ndarray            # feedforward, length M+1
    a: np.ndarray            # feedback, length L
    input_line: np.ndarray   # x(n) .. x(n-M)
    output_line: np.ndarray  # y(n-1) .. y(n-L)
    alpha: np.ndarray        # (M+1, L) history of d y/d b_k
    beta: np.ndarray         # (L, L) history of d y/d a_k

    @classmethod
    def zeros(cls, m: int, l: int) -> "IirFilterState":
        if m < 0 or l < 0 or m + l < 1:
            raise InvalidArgumentError("need M >= 0, L >= 0 and M + L >= 1")
        return cls(
            b=np.zeros(m + 1),
            a=np.zeros(l),
            input_line=np.zeros(m + 1),
            output_line=np.zeros(l),
            alpha=np.zeros((m + 1, l)),
            beta=np.zeros((l, l)),
        )

    @classmethod
    def with_coefficients(cls, b, a) -> "IirFilterState":
        b = as_signal(b, "b")
        a = as_signal(a, "a")
        if b.size < 1:
            raise InvalidArgumentError("b must hold at least one tap")
        state = cls.zeros(b.size - 1, a.size)
        state.b[:] = b
        state.a[:] = a
        return state

    @property
    def order_m(self) -> int:
        return self.b.size - 1

    @property
    def order_l(self) -> int:
        return self.a.size

    def coefficient_vector(self) -> np.ndarray:
        """Genes in adaptation order [b_0..b_M, a_1..a_L]."""
        return np.concatenate([self.b, self.a])


def pole_radii(a) -> np.ndarray:
    """Magnitudes of the feedback poles (roots of 1 - sum a_k z^-k)."""
    a = np.asarray(a, dtype=np.float64)
    l = a.size
    if l == 0:
        return np.empty(0)
    if l == 1:
        return np.abs(a)
    if l == 2:
        disc = a[0] * a[0] + 4.0 * a[1]
        if disc >= 0.0:
            s = math.sqrt(disc)
            return np.abs(np.array([(a[0] + s) / 2.0, (a[0] - s) / 2.0]))
        radius = math.sqrt(-a[1])  # conjugate pair: |p|^2 = product = -a2
        return np.array([radius, radius])
    return np.abs(np.roots(np.concatenate([[1.0], -a])))


def stabilize_poles(a) -> np.ndarray:
    """Clamp feedback poles to radius 0.99, preserving their angles.

    Returns ``a`` unchanged when every pole already lies within the limit.
    """
    a = as_signal(a, "a")
    l = a.size
    if l == 0:
        return a
    if l == 1:
        if abs(a[0]) <= POLE_RADIUS_LIMIT:
            return a
        return np.array([math.copysign(POLE_RADIUS_LIMIT, a[0])])
    roots = np.roots(np.concatenate([[1.0], -a]))
    mags = np.abs(roots)
    if np.all(mags <= POLE_RADIUS_LIMIT):
        return a
    scale = np.where(mags > POLE_RADIUS_LIMIT, POLE_RADIUS_LIMIT / mags, 1.0)
    coeffs = np.poly(roots * scale)
    return -coeffs[1:].real


def iir_output(state: IirFilterState, x_new: float) -> float:
    """Filter one sample with frozen coefficients; shifts the delay lines."""
    if not math.isfinite(x_new):
        raise InvalidSampleError("input sample must be finite")
    line = state.input_line
    line[1:] = line[:-1]
    line[0] = x_new
    y = float(np.dot(state.b, line))
    if state.order_l:
        y += float(np.dot(state.a, state.output_line))
        out = state.output_line
        out[1:] = out[:-1]
        out[0] = y
    if not math.isfinite(y):
        raise DivergenceError("filter output left the finite range", iteration=-1)
    return y


def iir_gradient_step(state: IirFilterState, x_new: float, d: float, mu: float):
    """One adaptation step; returns ``(state, y, eps)``.

    Computes the output, advances the alpha/beta sensitivity recursions with
    the current feedback coefficients, applies the gradient update to all
    coefficients, then re-stabilizes the poles.
    """
    if not (math.isfinite(x_new) and math.isfinite(d)):
        raise InvalidSampleError("input and desired samples must be finite")
    if not math.isfinite(mu):
        raise InvalidSampleError("mu must be finite")
    l = state.order_l
    line = state.input_line
    line[1:] = line[:-1]
    line[0] = x_new
    y = float(np.dot(state.b, line))
    if l:
        y += float(np.dot(state.a, state.output_line))
    eps = d - y

    # sensitivities at time n, driven by the current a's
    if l:
        with np.errstate(over="ignore", invalid="ignore"):
            alpha_new = line + state.alpha @ state.a
            beta_new = state.output_line + state.beta @ state.a
    else:
        alpha_new = line.copy()
        beta_new = state.beta[:0]

    if mu != 0.0:
        with np.errstate(over="ignore", invalid="ignore"):
            step = 2.0 * mu * eps
            state.b += step * alpha_new
            if l:
                state.a += step * beta_new
        if not (np.all(np.isfinite(state.b)) and np.all(np.isfinite(state.a))):
            raise DivergenceError("coefficients left the finite range", iteration=-1)
        if l:
            state.a = stabilize_poles(state.a)

    if l:
        state.alpha[:, 1:] = state.alpha[:, :-1]
        state.alpha[:, 0] = alpha_new
        state.beta[:, 1:] = state.beta[:, :-1]
        state.beta[:, 0] = beta_new
        out = state.output_line
        out[1:] = out[:-1]
        out[0] = y
    if not math.isfinite(y):
        raise DivergenceError("filter output left the finite range", iteration=-1)
    return state, y, eps


def run_iir_lms(x, d, m: int, l: int, cfg, initial=None):
    """Adapt an (M, L) recursive filter over the record.

    Same reporting contract as :func:`adaptid.adaptive_fir.run_fir_lms`;
    sensitivity histories start at zero.  The report's ``max_pole_radius``
    records the largest pole magnitude seen after any step.
    """
    from .sysid import ExperimentReport

    x = as_signal(x, "x")
    d = as_signal(d, "d")
    if x.size != d.size:
        raise InvalidArgumentError("x and d must have equal length")
    if initial is None:
        state = IirFilterState.zeros(m, l)
    else:
        state = IirFilterState.with_coefficients(*initial)
        if state.order_m != m or state.order_l != l:
            raise InvalidArgumentError("initial coefficients do not match (M, L)")

    tracker = CurveTracker(cfg.mse_window, cfg.convergence_threshold_db, cfg.hold)
    max_radius = float(np.max(pole_radii(state.a))) if l else 0.0
    n_iter = min(x.size, cfg.max_iterations)
    for n in range(n_iter):
        try:
            state, _, eps = iir_gradient_step(state, x[n], d[n], cfg.mu)
        except DivergenceError:
            raise DivergenceError("adaptation left the finite range", iteration=n)
        if l:
            max_radius = max(max_radius, float(np.max(pole_radii(state.a))))
        if tracker.push(eps):
            break
    return ExperimentReport(
        curve_eps2=np.asarray(tracker.eps2),
        curve_mse_db=np.asarray(tracker.db),
        converged_at=tracker.converged_at,
        final_weights={"b": state.b.copy(), "a": state.a.copy()},
        final_mse_db=tracker.final_mse_db,
        max_pole_radius=max_radius if l else None,
    )
