"""Voltage-consistency ("lumped") entropy.

Each series group contributes one voltage signal. A sliding coefficient of
variation per signal is scored against the cross-group spread, and a
skewness-like statistic of those scores flags the window where one group
stops behaving like the others. All statistics are population statistics
over the window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# spreads below this are treated as exactly degenerate
SPREAD_FLOOR = 1e-15


class SlidingWindowBuffer:
    """Fixed-width ring over the most recent samples of several signals."""

    def __init__(self, n_signals: int, window: int):
        if n_signals < 1:
            raise ValueError("need at least one signal")
        if window < 2:
            raise ValueError("window must be at least 2")
        self.n_signals = n_signals
        self.window = window
        self._data = np.zeros((n_signals, window))
        self._count = 0
        self._head = 0

    @property
    def warm(self) -> bool:
        return self._count >= self.window

    @property
    def count(self) -> int:
        return self._count

    def push(self, values) -> None:
        values = np.asarray(values, dtype=float)
        if values.shape != (self.n_signals,):
            raise ValueError(f"expected {self.n_signals} values, got shape {values.shape}")
        self._data[:, self._head] = values
        self._head = (self._head + 1) % self.window
        self._count += 1

    def window_array(self) -> np.ndarray:
        """Samples in arrival order, oldest first, shape (n_signals, window)."""
        if not self.warm:
            raise ValueError("buffer not warm yet")
        return np.roll(self._data, -self._head, axis=1)


def sliding_cv(buffer: SlidingWindowBuffer, signal: int | None = None):
    """Coefficient of variation (population std / mean) over the buffered window.

    With signal=None returns the vector across all signals.
    """
    win = buffer.window_array()
    if signal is not None:
        win = win[signal:signal + 1]
    mu = win.mean(axis=1)
    if (np.abs(mu) < SPREAD_FLOOR).any():
        raise ValueError("zero-mean window has no coefficient of variation")
    out = win.std(axis=1) / mu
    if signal is not None:
        return float(out[0])
    return out


def z_scores(xi: np.ndarray) -> np.ndarray:
    """Absolute z-score of each signal's CV against the cross-signal spread.

    A degenerate spread (all CVs equal) scores every signal 0.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.size < 2:
        raise ValueError("need at least two signals")
    sigma = xi.std()
    if sigma < SPREAD_FLOOR:
        return np.zeros_like(xi)
    return np.abs(xi - xi.mean()) / sigma


def dissimilarity_entropy(z: np.ndarray) -> float:
    """Third absolute moment over variance^(3/2) of the z-scores.

    Equals 1 for any symmetric two-valued multiset and 0 when all scores
    coincide.
    """
    z = np.asarray(z, dtype=float)
    if z.size < 2:
        raise ValueError("need at least two scores")
    dev = z - z.mean()
    var = np.mean(dev**2)
    if np.sqrt(var) < SPREAD_FLOOR:
        return 0.0
    return float(np.mean(np.abs(dev) ** 3) / var**1.5)


@dataclass
class LumpedEntropyTrace:
    """Per-frame CV vector, z-scores, and entropy; NaN during warm-up."""

    window: int
    xi: np.ndarray    # (n_frames, n_signals)
    z: np.ndarray     # (n_frames, n_signals)
    h_d: np.ndarray   # (n_frames,)


def lumped_entropy_series(volts: np.ndarray, window: int) -> LumpedEntropyTrace:
    """Vectorized trace over a (n_frames, n_signals) voltage matrix.

    Row k is defined once the window ending at frame k is full; earlier rows
    are NaN.
    """
    volts = np.asarray(volts, dtype=float)
    n, p = volts.shape
    xi = np.full((n, p), np.nan)
    z = np.full((n, p), np.nan)
    h_d = np.full(n, np.nan)
    if n < window:
        return LumpedEntropyTrace(window, xi, z, h_d)

    wins = np.lib.stride_tricks.sliding_window_view(volts, window, axis=0)  # (n-W+1, P, W)
    mu = wins.mean(axis=2)
    if (np.abs(mu) < SPREAD_FLOOR).any():
        raise ValueError("zero-mean voltage window")
    cv = wins.std(axis=2) / mu

    mu_cv = cv.mean(axis=1, keepdims=True)
    sd_cv = cv.std(axis=1)
    scores = np.abs(cv - mu_cv)
    ok = sd_cv >= SPREAD_FLOOR
    scores[ok] /= sd_cv[ok, None]
    scores[~ok] = 0.0

    dev = scores - scores.mean(axis=1, keepdims=True)
    var = np.mean(dev**2, axis=1)
    third = np.mean(np.abs(dev) ** 3, axis=1)
    ent = np.zeros(len(var))
    good = np.sqrt(var) >= SPREAD_FLOOR
    ent[good] = third[good] / var[good] ** 1.5

    xi[window - 1:] = cv
    z[window - 1:] = scores
    h_d[window - 1:] = ent
    return LumpedEntropyTrace(window, xi, z, h_d)
