"""Internal learning-curve bookkeeping shared by the adaptive runners."""

from __future__ import annotations

from collections import deque

from .errors import DivergenceError

# runaway factor over the initial windowed error power
_DIVERGENCE_FACTOR = 1e6
# guards the ratio test when a run starts at exactly zero error
_ZERO_MSE_FLOOR = 1e-30


def mse_db(mse: float) -> float:
    """Mean-square error in dB: 10 log10(mse), clamped to -400 at zero."""
    import math

    from .errors import InvalidArgumentError

    if mse < 0.0 or math.isnan(mse):
        raise InvalidArgumentError("mse must be >= 0")
    if mse == 0.0:
        return -400.0
    return 10.0 * math.log10(mse)


class CurveTracker:
    """Per-iteration error trace with divergence and convergence detection.

    The dB trace uses the trailing-window mean of squared errors; before the
    window fills, the mean runs over the samples seen so far.  Divergence is
    declared when the windowed error power exceeds 1e6x its value at the
    first full window.  Convergence is the first iteration whose windowed
    dB value crosses the threshold and stays there for ``hold`` further
    iterations.
    """

    def __init__(self, window: int, threshold_db: float | None, hold: int):
        if window < 1:
            raise ValueError("window must be >= 1")
        if hold < 1:
            raise ValueError("hold must be >= 1")
        self.window = window
        self.threshold_db = threshold_db
        self.hold = hold
        self.eps2: list[float] = []
        self.db: list[float] = []
        self._win: deque[float] = deque(maxlen=window)
        self._initial_mse: float | None = None
        self._below = 0
        self.converged_at: int | None = None

    def push(self, eps: float) -> bool:
        """Record one error sample; True once convergence is confirmed."""
        e2 = eps * eps
        self._win.append(e2)
        wmse = sum(self._win) / len(self._win)
        n = len(self.eps2)
        self.eps2.append(e2)
        db = mse_db(wmse)
        self.db.append(db)
        if len(self._win) == self.window:
            if self._initial_mse is None:
                self._initial_mse = max(wmse, _ZERO_MSE_FLOOR)
            elif wmse > _DIVERGENCE_FACTOR * self._initial_mse:
                raise DivergenceError("windowed error power blew up", iteration=n)
        if self.threshold_db is not None and db <= self.threshold_db:
            self._below += 1
            if self._below == self.hold + 1:
                self.converged_at = n - self.hold
                return True
        else:
            self._below = 0
        return False

    @property
    def final_mse_db(self) -> float | None:
        return self.db[-1] if self.db else None
