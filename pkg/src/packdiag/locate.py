"""Locating the faulted cell once an alarm has fired.

Each sliding window that overlaps the alarm contributes the absolute drift
of its spatial basis against the initial one; averaging those drifts per
sensor concentrates mass on the cell whose temperature profile changed.
With one sensor per cell the argmax maps straight to a cell serial number.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .pack import PackLayout
from .pipeline import Telemetry
from .spacetime import Decomposition, decompose_window


@dataclass
class ContributionMap:
    """Per-sensor basis-drift mass over the alarm window."""

    contributions: np.ndarray   # (n_sensors,) nonnegative
    t_start: float              # first window end covered, seconds
    t_f: float                  # alarm time, seconds
    argmax_sensor: int          # 0-based sensor index, ties -> lowest
    cell_serial: int            # 1-based serial of that sensor's cell


def contribution(decs: list[Decomposition], initial: Decomposition,
                 span: tuple[float, float] = (float("nan"), float("nan")),
                 ) -> ContributionMap:
    """Average absolute basis drift of the given windows against the initial.

    Per sensor this is (1 / (order * n_windows)) times the summed |phi - phi0|
    over every mode of every window. The windows must already be sign-aligned
    to the initial decomposition, which decompose_window(reference=initial)
    guarantees.
    """
    if not decs:
        raise ValueError("no decompositions to attribute the alarm to")
    order = initial.order
    n = initial.phi.shape[0]
    acc = np.zeros(n)
    for dec in decs:
        if dec.order != order:
            raise ValueError("decompositions have different orders")
        if dec.phi.shape[0] != n:
            raise ValueError("decompositions cover different sensor counts")
        acc += np.abs(dec.phi - initial.phi).sum(axis=1)
    acc /= order * len(decs)
    argmax = int(np.argmax(acc))
    return ContributionMap(contributions=acc, t_start=float(span[0]),
                           t_f=float(span[1]), argmax_sensor=argmax,
                           cell_serial=argmax + 1)


def localize(cmap: ContributionMap, layout: PackLayout) -> int:
    """Serial number of the cell with the largest contribution.

    Exact ties resolve to the lowest serial, so the answer is deterministic.
    """
    c = np.asarray(cmap.contributions, dtype=float)
    if c.shape != (layout.n_cells,):
        raise ValueError("contribution length does not match the layout")
    return int(np.argmax(c)) + 1


def contributions_at(tele: Telemetry, t_f: float, window: int,
                     order: int = 1, layout: PackLayout | None = None,
                     ) -> ContributionMap:
    """Recompute the alarm-window decompositions and build their map.

    Windows are re-derived from the raw telemetry rather than cached from
    detection, so this stands on its own. The map covers every full window
    ending within `window` frames of the alarm; an alarm earlier than the
    first full window cannot be attributed.
    """
    w = int(window)
    if w < 1:
        raise ConfigError("window must be a positive integer")
    hits = np.isclose(tele.times, t_f, rtol=0.0, atol=1e-9)
    if not hits.any():
        raise ValueError(f"t_f={t_f} is not a sampled frame time")
    idx = int(np.nonzero(hits)[0][0])
    if idx < w - 1:
        raise ConfigError("alarm in warm-up: no full window ends by t_f")

    initial = decompose_window(tele.temps[:w].T, order=order)
    first = max(w - 1, idx - w + 1)
    decs = [
        decompose_window(tele.temps[k - w + 1 : k + 1].T, order=order,
                         reference=initial)
        for k in range(first, idx + 1)
    ]
    return contribution(decs, initial,
                        span=(float(tele.times[first]), float(tele.times[idx])))


def contribution_rows(cmap: ContributionMap, layout: PackLayout) -> list[str]:
    """Plot-ready export: one row per sensor with its position and mass."""
    c = np.asarray(cmap.contributions, dtype=float)
    if c.shape != (layout.n_cells,):
        raise ValueError("contribution length does not match the layout")
    rows = ["cell,serial,x,y,C"]
    for i in range(layout.n_cells):
        x, y = layout.cell_centers[i]
        rows.append(f"T{i + 1:02d},{i + 1},{x:.12g},{y:.12g},{c[i]:.12g}")
    return rows
