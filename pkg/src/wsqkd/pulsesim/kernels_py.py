"""Pure numpy implementation of the per-block simulation kernels.

This is the fallback backend; the compiled extension implements the same
contract. Both consume identical pre-drawn uniform arrays and must produce
bit-identical counts, so every decision here is a plain threshold comparison
on those arrays.
"""

from __future__ import annotations

import numpy as np


def sim_block(
    u_class: np.ndarray,
    u_photon: np.ndarray,
    u_dark: np.ndarray,
    u_err: np.ndarray,
    u_sift: np.ndarray,
    u_bit: np.ndarray,
    u_x: np.ndarray,
    c1: float,
    c12: float,
    pdet: tuple[float, float, float],
    y0: float,
    e_det: float,
    q_sift: float,
    dead_gates: int,
    px: float,
    record: bool,
):
    """Simulate one block of pulses; returns the counts tuple.

    Counts: (pulses[3], cand_clicks[3], cand_errors[3], accepted[3],
    sifted[3], sifted_errors[3], x_clicks, x_errors, trace_or_None).
    """
    cls = np.where(u_class < c1, 0, np.where(u_class < c12, 1, 2)).astype(np.int8)
    p_det = np.take(np.asarray(pdet, dtype=np.float64), cls)
    photon = u_photon < p_det
    dark = u_dark < y0
    cand = photon | dark
    err = np.where(photon, u_err < e_det, u_err < 0.5) & cand

    pulses = np.bincount(cls, minlength=3)
    cand_clicks = np.bincount(cls[cand], minlength=3)
    cand_errors = np.bincount(cls[err], minlength=3)

    if dead_gates <= 0:
        acc_idx = np.flatnonzero(cand)
    else:
        acc: list[int] = []
        live_at = 0
        for i in np.flatnonzero(cand).tolist():
            if i >= live_at:
                acc.append(i)
                live_at = i + dead_gates + 1
        acc_idx = np.asarray(acc, dtype=np.int64)

    accepted = np.bincount(cls[acc_idx], minlength=3)
    sift_idx = acc_idx[u_sift[acc_idx] < q_sift]
    sifted = np.bincount(cls[sift_idx], minlength=3)
    sifted_errors = np.bincount(cls[sift_idx[err[sift_idx]]], minlength=3)

    x_clicks = 0
    x_errors = 0
    if px > 0.0:
        x_clicks = int(np.count_nonzero(u_x < px))
        x_errors = int(np.count_nonzero(u_x < 0.5 * px))

    trace = None
    if record:
        bits = (u_bit[acc_idx] < 0.5) ^ err[acc_idx]
        trace = (
            acc_idx.astype(np.int64),
            cls[acc_idx].astype(np.uint8),
            bits.astype(np.uint8),
            err[acc_idx].astype(np.uint8),
        )

    return (
        pulses.astype(np.int64),
        cand_clicks.astype(np.int64),
        cand_errors.astype(np.int64),
        accepted.astype(np.int64),
        sifted.astype(np.int64),
        sifted_errors.astype(np.int64),
        x_clicks,
        x_errors,
        trace,
    )


def dead_time_block(times: np.ndarray, tau: float) -> int:
    """Count arrivals surviving a non-paralyzable dead time ``tau``.

    ``times`` must be sorted; the detector starts live.
    """
    n = times.shape[0]
    if n == 0:
        return 0
    if tau <= 0.0:
        return n
    count = 0
    pos = 0
    while pos < n:
        count += 1
        pos = int(np.searchsorted(times, times[pos] + tau, side="left"))
    return count
