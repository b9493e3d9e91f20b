"""End-to-end assembly: telemetry frames -> entropy streams -> alarm decisions.

This ties the three abnormality measures to the shared sliding window:
voltage dissimilarity across series groups, spatial imbalance of the
temperature basis, and temporal irregularity of the mode coefficients.
Calibration derives the per-stream normalizers and the alarm threshold
from a leading stretch of presumed-normal frames of the same recording.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .fusion import (
    DetectionOutcome,
    DetectorParams,
    detect,
    fit_kde,
    multiscale_statistic,
    threshold_from_kde,
)
from .lumped import lumped_entropy_series
from .pack import PackLayout, TelemetryFrame, build_layout
from .spacetime import (
    LN2,
    NULL_MASS_FLOOR,
    SPREAD_FLOOR,
    Decomposition,
    FuzzyParams,
    decompose_window,
    sbf_variation,
    spatial_entropy,
    temporal_entropy,
)


@dataclass
class Telemetry:
    """Column-stacked sensor history for one recording."""

    times: np.ndarray    # (n,) seconds
    temps: np.ndarray    # (n, n_cells) cell surface temperatures, K
    volts: np.ndarray    # (n, n_groups) series-group terminal voltages, V
    current: np.ndarray  # (n,) pack current, A
    labels: np.ndarray   # (n,) 0 normal / 1 abnormal

    def __post_init__(self):
        n = self.times.shape[0]
        for name in ("temps", "volts", "current", "labels"):
            arr = getattr(self, name)
            if arr.shape[0] != n:
                raise ValueError(f"{name} has {arr.shape[0]} rows, expected {n}")

    @classmethod
    def from_frames(cls, frames: list[TelemetryFrame]) -> "Telemetry":
        if not frames:
            raise ValueError("empty frame list")
        return cls(
            times=np.array([f.t for f in frames]),
            temps=np.array([f.cell_temps for f in frames]),
            volts=np.array([f.group_volts for f in frames]),
            current=np.array([f.pack_current for f in frames]),
            labels=np.array([f.label for f in frames], dtype=int),
        )

    @property
    def n_frames(self) -> int:
        return self.times.shape[0]

    def onset(self) -> float | None:
        """Last normal timestamp before the labeled stretch, None if all normal."""
        idx = np.nonzero(self.labels == 1)[0]
        if idx.size == 0:
            return None
        if idx[0] == 0:
            return float(self.times[0])
        return float(self.times[idx[0] - 1])


@dataclass
class EntropyStreams:
    """Per-frame abnormality streams; NaN over the warm-up prefix."""

    times: np.ndarray
    h_d: np.ndarray
    h_s: np.ndarray
    h_t: np.ndarray
    window: int
    initial: Decomposition


def entropy_streams(tele: Telemetry, window: int, order: int = 1,
                    fuzzy: FuzzyParams | None = None,
                    layout: PackLayout | None = None) -> EntropyStreams:
    """Compute all three streams over a recording with a shared window length.

    Row k is defined once k+1 >= window; earlier rows are NaN. The reference
    decomposition is taken from the earliest full window of the recording
    itself, so the spatial stream starts at exactly zero.

    The default keeps only the dominant spatial mode: for a slowly varying
    temperature field the higher modes sit at the sensor-noise floor, and
    folding them in dilutes basis drift with noise rotation. Order one is a
    batched vector path; other orders fall back to a per-window loop that
    gives identical numbers mode for mode.
    """
    if fuzzy is None:
        fuzzy = FuzzyParams()
    if layout is None:
        layout = build_layout()
    n = tele.n_frames
    w = int(window)
    if w < fuzzy.m + 2:
        raise ValueError(f"window {w} too short for order-{fuzzy.m} matching")
    if n < w:
        raise ValueError(f"recording has {n} frames, needs at least {w}")
    if tele.temps.shape[1] != layout.n_cells:
        raise ValueError("temperature channel count does not match the layout")

    h_d = lumped_entropy_series(tele.volts, w).h_d
    coords = layout.cell_centers
    initial = decompose_window(tele.temps[:w].T, order=order)
    if order == 1:
        h_s, h_t = _rank1_streams(tele.temps, w, fuzzy, coords, initial)
    else:
        h_s, h_t = _looped_streams(tele.temps, w, order, fuzzy, coords, initial)

    return EntropyStreams(times=tele.times.copy(), h_d=h_d, h_s=h_s, h_t=h_t,
                          window=w, initial=initial)


def _looped_streams(temps: np.ndarray, w: int, order: int, fuzzy: FuzzyParams,
                    coords: np.ndarray, initial: Decomposition):
    """Reference implementation: one decomposition per sliding window."""
    n = temps.shape[0]
    h_s = np.full(n, np.nan)
    h_t = np.full(n, np.nan)
    for k in range(w - 1, n):
        win = temps[k - w + 1 : k + 1].T
        dec = decompose_window(win, order=order, reference=initial)
        pdf = sbf_variation(dec, initial, coords)
        h_s[k] = spatial_entropy(pdf)
        h_t[k] = temporal_entropy(dec, fuzzy)
    return h_s, h_t


def _xlog2(v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    mask = v > 0.0
    out[mask] = v[mask] * np.log2(v[mask])
    return out


def _rank1_streams(temps: np.ndarray, w: int, fuzzy: FuzzyParams,
                   coords: np.ndarray, initial: Decomposition,
                   chunk: int | None = None):
    """Vectorized single-mode streams; numerically matches the loop.

    All sliding windows are stacked and decomposed by one batched SVD per
    chunk, and the fuzzy similarity sums of the leading temporal coefficient
    are evaluated as broadcast pairwise reductions. Chunking bounds the
    pairwise intermediates at a few tens of megabytes.
    """
    fuzzy.validate()
    n, n_cells = temps.shape
    n_win = n - w + 1
    m = fuzzy.m
    count = w - m
    half = math.ceil(n_cells / 2)
    lower = [np.argsort(coords[:, ax], kind="stable")[:half] for ax in range(2)]
    phi0 = initial.phi[:, 0]

    if chunk is None:
        pair_bytes = count * count * 8
        chunk = max(4, int(48e6 / max(pair_bytes, 1)))
    chunk = min(chunk, n_win)

    h_s = np.full(n, np.nan)
    h_t = np.full(n, np.nan)
    windows = np.lib.stride_tricks.sliding_window_view(temps, w, axis=0)
    pair_buf = np.empty((chunk, count, count))
    dim_buf = np.empty((chunk, count, count))
    diag = np.arange(count)

    for start in range(0, n_win, chunk):
        stop = min(start + chunk, n_win)
        block = np.ascontiguousarray(windows[start:stop])  # (c, n_cells, w)
        u, s, vt = np.linalg.svd(block, full_matrices=False)
        phi = u[:, :, 0]
        lam = s[:, 0].copy()
        a = vt[:, 0, :].copy()
        # rank-0 windows mirror the loop's zero-filled degenerate modes
        dead = lam <= 0.0
        if dead.any():
            phi[dead] = 0.0
            lam[dead] = 0.0
            a[dead] = 0.0
        flip = phi @ phi0 < 0.0
        phi[flip] = -phi[flip]
        a[flip] = -a[flip]

        variation = np.abs(phi - phi0)
        total = variation.sum(axis=1)
        null = total < NULL_MASS_FLOOR
        safe = np.where(null, 1.0, total)
        p = variation / safe[:, None]
        hs_blk = np.zeros(stop - start)
        for ax in range(2):
            p1 = p[:, lower[ax]].sum(axis=1)
            hs_blk += 1.0 + _xlog2(p1) + _xlog2(1.0 - p1)
        hs_blk *= 0.5
        hs_blk[null] = 0.0

        if fuzzy.r is None:
            spread = a.std(axis=1)
            quiet = spread < SPREAD_FLOOR
            r = 0.2 * np.where(quiet, 1.0, spread)
        else:
            quiet = np.zeros(stop - start, dtype=bool)
            r = np.full(stop - start, float(fuzzy.r))
        log_sim = np.zeros((2, stop - start))
        for j, mu in enumerate((m, m + 1)):
            b = np.lib.stride_tricks.sliding_window_view(a, mu, axis=1)[:, :count]
            b = np.abs(b - b.mean(axis=2, keepdims=True))
            # chebyshev distances one component at a time, largest kept
            d = pair_buf[: stop - start]
            np.subtract(b[:, :, None, 0], b[:, None, :, 0], out=d)
            np.abs(d, out=d)
            for dim in range(1, mu):
                dd = dim_buf[: stop - start]
                np.subtract(b[:, :, None, dim], b[:, None, :, dim], out=dd)
                np.abs(dd, out=dd)
                np.maximum(d, dd, out=d)
            # in-place Gaussian similarity, self-pairs dropped before the sum
            d /= r[:, None, None]
            np.multiply(d, d, out=d)
            d *= -LN2
            np.exp(d, out=d)
            d[:, diag, diag] = 0.0
            log_sim[j] = np.log(d.sum(axis=(1, 2)) / (count * (count - 1)))
        fe = log_sim[0] - log_sim[1]
        fe[quiet] = 0.0
        ht_blk = lam * fe
        ht_blk[dead] = 0.0

        h_s[w - 1 + start : w - 1 + stop] = hs_blk
        h_t[w - 1 + start : w - 1 + stop] = ht_blk

    return h_s, h_t


def calibrate_pooled(streams_list: list[EntropyStreams],
                     params: DetectorParams) -> DetectorParams:
    """Fill in normalizers and alarm threshold from pooled training prefixes.

    Training frames are those with t <= train_len that already have defined
    stream values, gathered across every given recording. Returns a new
    parameter set; the inputs are not modified.
    """
    params.validate()
    if not streams_list:
        raise ConfigError("need at least one stream set to calibrate")
    parts = {"h_d": [], "h_s": [], "h_t": []}
    for streams in streams_list:
        if params.train_len > streams.times[-1]:
            raise ConfigError("train_len exceeds the recording length")
        train = (streams.times <= params.train_len) & ~np.isnan(streams.h_d)
        if not train.any():
            raise ConfigError("training prefix has no usable frames; "
                              "increase train_len or shorten the window")
        for name in parts:
            parts[name].append(getattr(streams, name)[train])
    h_d, h_s, h_t = (np.concatenate(parts[n]) for n in ("h_d", "h_s", "h_t"))
    max_hd = float(np.nanmax(h_d))
    max_hs = float(np.nanmax(h_s))
    max_ht = float(np.nanmax(h_t))
    for name, val in (("max_hd", max_hd), ("max_hs", max_hs), ("max_ht", max_ht)):
        if not np.isfinite(val) or val <= 0.0:
            raise ConfigError(f"training produced a degenerate normalizer {name}={val}")
    cal = dataclasses.replace(params, max_hd=max_hd, max_hs=max_hs, max_ht=max_ht)
    h_train = multiscale_statistic(h_d, h_s, h_t, cal)
    model = fit_kde(h_train)
    h_r = threshold_from_kde(model, params.beta)
    return dataclasses.replace(cal, h_r=h_r)


def calibrate_from_streams(streams: EntropyStreams,
                           params: DetectorParams) -> DetectorParams:
    """Single-recording calibration; see calibrate_pooled."""
    return calibrate_pooled([streams], params)


@dataclass
class DetectorReport:
    """Everything one detection pass produced."""

    streams: EntropyStreams
    h_stream: np.ndarray
    params: DetectorParams        # the calibrated set actually used
    outcome: DetectionOutcome


def run_detector(tele: Telemetry, params: DetectorParams,
                 order: int = 1, fuzzy: FuzzyParams | None = None,
                 layout: PackLayout | None = None,
                 refit: bool = True) -> DetectorReport:
    """Score a recording and raise alarms.

    With refit=True (default) the normalizers and threshold are re-derived
    from this recording's own training prefix; otherwise params must already
    be calibrated and is used as-is.
    """
    streams = entropy_streams(tele, params.window, order=order,
                              fuzzy=fuzzy, layout=layout)
    if refit or not params.calibrated:
        params = calibrate_from_streams(streams, params)
    else:
        params.validate(calibrated=True)
    h = multiscale_statistic(streams.h_d, streams.h_s, streams.h_t, params)
    outcome = detect(streams.times, h, params, onset=tele.onset())
    return DetectorReport(streams=streams, h_stream=h, params=params,
                          outcome=outcome)
