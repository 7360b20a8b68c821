"""Training-signal generation: seeded RNG, four-level scheme, FIR coloring.

All randomness in the toolkit flows through :class:`RngStream`, a SplitMix64
counter generator specified exactly below so that any implementation (or
language) can reproduce the streams bit for bit:

    state(n) = (seed + n * 0x9E3779B97F4A7C15) mod 2**64      n = 1, 2, ...
    z = state(n)
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2**64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) mod 2**64
    out(n) = z ^ (z >> 31)

``uniform()`` maps out(n) to [0, 1) as ``(out(n) >> 11) * 2**-53``.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidArgumentError

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# four-level alphabet, indexed by quartile of the uniform draw
_LEVELS = np.array([-3.0, -1.0, 1.0, 3.0])


def _finalize(state: np.ndarray) -> np.ndarray:
    """SplitMix64 output function on an array of uint64 counter states."""
    z = state.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_MIX1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_MIX2)
    z ^= z >> np.uint64(31)
    return z


class RngStream:
    """Deterministic uniform stream; same seed -> identical samples.

    Single-owner: do not share one instance between concurrent consumers.
    Independent child streams come from :meth:`spawn`.
    """

    def __init__(self, seed: int, counter: int = 0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.counter = int(counter)

    def next_u64(self) -> int:
        self.counter += 1
        state = np.uint64((self.seed + self.counter * _GAMMA) % (1 << 64))
        return int(_finalize(state[None])[0])

    def uniform(self) -> float:
        """One double in [0, 1)."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def uniform_block(self, n: int) -> np.ndarray:
        """``n`` doubles in [0, 1); identical values to ``n`` uniform() calls."""
        if n < 0:
            raise InvalidArgumentError("block size must be >= 0")
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            states = (np.uint64(self.seed) + idx * np.uint64(_GAMMA)) & _MASK64
            out = _finalize(states)
        self.counter += n
        return (out >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def spawn(self, key: int) -> "RngStream":
        """Derive an independent stream from this stream's seed and ``key``."""
        mixed = np.uint64((self.seed ^ ((key + 1) * _GAMMA)) % (1 << 64))
        return RngStream(int(_finalize(mixed[None])[0]))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, counter={self.counter})"


def as_signal(x, name: str = "signal") -> np.ndarray:
    """Validate and return a finite 1-D float64 sample array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidArgumentError(f"{name} must be one-dimensional")
    if arr.size and not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains NaN or Inf")
    return arr


def gen_four_level(n_samples: int, rng: RngStream) -> np.ndarray:
    """Draw a sequence from the alphabet {-3, -1, +1, +3}.

    Each sample maps one uniform draw R to a level by quartile:
    [0, .25) -> -3, [.25, .5) -> -1, [.5, .75) -> +1, [.75, 1] -> +3.
    """
    if n_samples < 0:
        raise InvalidArgumentError("n_samples must be >= 0")
    if n_samples == 0:
        return np.empty(0, dtype=np.float64)
    r = rng.uniform_block(n_samples)
    quartile = np.minimum((r * 4.0).astype(np.intp), 3)
    return _LEVELS[quartile]


def color(x, lpf) -> np.ndarray:
    """Pass ``x`` through an FIR filter with zero pre-history.

    y(n) = sum_k h(k) x(n-k), x(n-k) = 0 for n-k < 0; output length equals
    input length (the system is switched on at n = 0).
    """
    x = as_signal(x, "x")
    taps = as_signal(lpf, "lpf")
    if taps.size == 0:
        raise InvalidArgumentError("lpf must hold at least one tap")
    if x.size == 0:
        return x.copy()
    return np.convolve(x, taps)[: x.size]


def standard_lpf_8tap() -> np.ndarray:
    """The fixed 8-tap FIR low-pass filter used by the colored-input benchmarks."""
    return np.array(
        [0.0012654, -0.0052341, -0.0019735, -0.0023009, 0.022366, 0.12833, 0.0013, 0.0012]
    )


def signal_to_csv(x, path) -> None:
    """Write a signal as CSV with header ``n,x``."""
    x = as_signal(x)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("n,x\n")
        for n, v in enumerate(x):
            fh.write(f"{n},{float(v)!r}\n")


def taps_to_csv(taps, path) -> None:
    """Write filter taps as CSV with header ``k,h``."""
    taps = as_signal(taps, "taps")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("k,h\n")
        for k, v in enumerate(taps):
            fh.write(f"{k},{float(v)!r}\n")


def signal_from_csv(path) -> np.ndarray:
    """Read back a ``n,x`` CSV written by :func:`signal_to_csv`."""
    data = np.genfromtxt(path, delimiter=",", skip_header=1, dtype=np.float64)
    if data.size == 0:
        return np.empty(0, dtype=np.float64)
    data = np.atleast_2d(data)
    return data[:, 1].copy()
