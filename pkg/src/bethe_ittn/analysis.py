"""Sweep post-processing: transition estimate, derivatives, power-law fit."""

from __future__ import annotations

import dataclasses

import numpy as np

__all__ = [
    "FitResult",
    "analyze_derivatives",
    "derivative_table",
    "estimate_hc",
    "fit_beta",
    "trotter_ratio",
]


def estimate_hc(hs, mxs, threshold: float = 1e-2):
    """Transition estimate from an ascending magnetization sweep.

    Returns the midpoint between the last field with |m_x| > threshold and
    the first field after it at or below threshold; None when the sweep
    never crosses (all ordered or all disordered).
    """
    hs = np.asarray(hs, dtype=np.float64)
    mxs = np.abs(np.asarray(mxs, dtype=np.float64))
    if hs.ndim != 1 or hs.shape != mxs.shape or hs.size < 2:
        raise ValueError("need matching 1d arrays with at least two points")
    if np.any(np.diff(hs) <= 0):
        raise ValueError("fields must be strictly ascending")
    above = np.flatnonzero(mxs > threshold)
    if above.size == 0 or above[-1] == hs.size - 1:
        return None
    last = int(above[-1])
    return float((hs[last] + hs[last + 1]) / 2.0)


def derivative_table(hs, energies) -> list[tuple[float, float, float, float]]:
    """Rows (h, E, dE/dh, d2E/dh2) by central differences on a uniform grid.

    Endpoints use one-sided differences (first order for dE, the adjacent
    three-point stencil for d2E).  Needs at least five points; raises on a
    non-uniform grid.
    """
    hs = np.asarray(hs, dtype=np.float64)
    es = np.asarray(energies, dtype=np.float64)
    if hs.size != es.size or hs.size < 5:
        raise ValueError("need at least five matching points")
    steps = np.diff(hs)
    dh = float(steps[0])
    if dh <= 0 or np.max(np.abs(steps - dh)) > 1e-9 * abs(dh):
        raise ValueError("field grid must be uniform and ascending")
    n = hs.size
    d1 = np.empty(n)
    d2 = np.empty(n)
    d1[1:-1] = (es[2:] - es[:-2]) / (2 * dh)
    d2[1:-1] = (es[2:] - 2 * es[1:-1] + es[:-2]) / dh**2
    d1[0] = (es[1] - es[0]) / dh
    d1[-1] = (es[-1] - es[-2]) / dh
    d2[0] = (es[2] - 2 * es[1] + es[0]) / dh**2
    d2[-1] = (es[-1] - 2 * es[-2] + es[-3]) / dh**2
    return [(float(hs[i]), float(es[i]), float(d1[i]), float(d2[i])) for i in range(n)]


def analyze_derivatives(records) -> list[tuple[float, float, float, float]]:
    """derivative_table over a sweep's result records (h, energy_per_site).

    Records must already be in ascending field order on a uniform grid, as
    run_sweep emits them; failed (NaN) points propagate NaN derivatives to
    their stencil neighbours rather than being silently dropped.
    """
    return derivative_table([r.h for r in records], [r.energy_per_site for r in records])


@dataclasses.dataclass
class FitResult:
    beta: float
    h_c_used: float
    residual_rms: float  # rms of the log-log fit residuals
    amplitude: float
    n_points: int


def fit_beta(hs, mxs, h_c: float, window: tuple[float, float] | None = None) -> FitResult:
    """Least-squares slope of ln m_x against ln(h_c - h).

    `window` is an (h_lo, h_hi) field range below the transition; defaults
    to (h_c - 0.15, h_c - 0.01).  Requires at least four points with
    positive magnetization inside the window.
    """
    hs = np.asarray(hs, dtype=np.float64)
    mxs = np.abs(np.asarray(mxs, dtype=np.float64))
    if window is None:
        window = (h_c - 0.15, h_c - 0.01)
    lo, hi = window
    mask = (hs >= lo) & (hs <= hi) & (hs < h_c) & (mxs > 0)
    if int(mask.sum()) < 4:
        raise ValueError(
            f"need >= 4 points with m_x > 0 in window ({lo}, {hi}), found {int(mask.sum())}"
        )
    x = np.log(h_c - hs[mask])
    y = np.log(mxs[mask])
    coeffs = np.polyfit(x, y, 1)
    fit = np.polyval(coeffs, x)
    rms = float(np.sqrt(np.mean((y - fit) ** 2)))
    return FitResult(
        beta=float(coeffs[0]),
        h_c_used=float(h_c),
        residual_rms=rms,
        amplitude=float(np.exp(coeffs[1])),
        n_points=int(mask.sum()),
    )


def trotter_ratio(values) -> float:
    """Richardson ratio |v1 - v2| / |v2 - v3| for step counts N, 2N, 4N.

    A second-order integrator gives ratios near 4.
    """
    v1, v2, v3 = (float(v) for v in values)
    denom = abs(v2 - v3)
    if denom == 0.0:
        raise ValueError("values are exactly converged; ratio undefined")
    return abs(v1 - v2) / denom
