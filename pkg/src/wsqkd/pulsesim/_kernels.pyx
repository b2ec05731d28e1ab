# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-block simulation kernels.

Mirrors kernels_py exactly: same inputs, same threshold decisions, same
counts. Any semantic change here must be made in the numpy fallback too.
"""

import numpy as np

cimport numpy as cnp


def sim_block(
    double[::1] u_class,
    double[::1] u_photon,
    double[::1] u_dark,
    double[::1] u_err,
    double[::1] u_sift,
    double[::1] u_bit,
    double[::1] u_x,
    double c1,
    double c12,
    pdet,
    double y0,
    double e_det,
    double q_sift,
    long dead_gates,
    double px,
    bint record,
):
    cdef Py_ssize_t n = u_class.shape[0]
    cdef double pdet0 = pdet[0]
    cdef double pdet1 = pdet[1]
    cdef double pdet2 = pdet[2]
    cdef double px_half = 0.5 * px
    cdef bint inject = px > 0.0

    cdef cnp.int64_t[::1] pulses = np.zeros(3, dtype=np.int64)
    cdef cnp.int64_t[::1] cand_clicks = np.zeros(3, dtype=np.int64)
    cdef cnp.int64_t[::1] cand_errors = np.zeros(3, dtype=np.int64)
    cdef cnp.int64_t[::1] accepted = np.zeros(3, dtype=np.int64)
    cdef cnp.int64_t[::1] sifted = np.zeros(3, dtype=np.int64)
    cdef cnp.int64_t[::1] sifted_errors = np.zeros(3, dtype=np.int64)
    cdef long x_clicks = 0
    cdef long x_errors = 0

    cdef cnp.int64_t[::1] t_idx
    cdef cnp.uint8_t[::1] t_cls
    cdef cnp.uint8_t[::1] t_bit
    cdef cnp.uint8_t[::1] t_err
    trace_idx = trace_cls = trace_bit = trace_err = None
    if record:
        trace_idx = np.empty(n, dtype=np.int64)
        trace_cls = np.empty(n, dtype=np.uint8)
        trace_bit = np.empty(n, dtype=np.uint8)
        trace_err = np.empty(n, dtype=np.uint8)
        t_idx = trace_idx
        t_cls = trace_cls
        t_bit = trace_bit
        t_err = trace_err

    cdef Py_ssize_t i
    cdef Py_ssize_t n_trace = 0
    cdef Py_ssize_t live_at = 0
    cdef int cls
    cdef double p_det
    cdef bint photon, dark, cand, err, bit

    with nogil:
        for i in range(n):
            if u_class[i] < c1:
                cls = 0
                p_det = pdet0
            elif u_class[i] < c12:
                cls = 1
                p_det = pdet1
            else:
                cls = 2
                p_det = pdet2
            pulses[cls] += 1

            photon = u_photon[i] < p_det
            dark = u_dark[i] < y0
            cand = photon or dark
            if cand:
                if photon:
                    err = u_err[i] < e_det
                else:
                    err = u_err[i] < 0.5
                cand_clicks[cls] += 1
                if err:
                    cand_errors[cls] += 1
                if i >= live_at:
                    accepted[cls] += 1
                    live_at = i + dead_gates + 1
                    if u_sift[i] < q_sift:
                        sifted[cls] += 1
                        if err:
                            sifted_errors[cls] += 1
                    if record:
                        bit = (u_bit[i] < 0.5) ^ err
                        t_idx[n_trace] = i
                        t_cls[n_trace] = <cnp.uint8_t> cls
                        t_bit[n_trace] = <cnp.uint8_t> bit
                        t_err[n_trace] = <cnp.uint8_t> err
                        n_trace += 1
            if inject:
                if u_x[i] < px:
                    x_clicks += 1
                    if u_x[i] < px_half:
                        x_errors += 1

    trace = None
    if record:
        trace = (
            trace_idx[:n_trace].copy(),
            trace_cls[:n_trace].copy(),
            trace_bit[:n_trace].copy(),
            trace_err[:n_trace].copy(),
        )
    return (
        np.asarray(pulses),
        np.asarray(cand_clicks),
        np.asarray(cand_errors),
        np.asarray(accepted),
        np.asarray(sifted),
        np.asarray(sifted_errors),
        x_clicks,
        x_errors,
        trace,
    )


def dead_time_block(double[::1] times, double tau):
    """Count arrivals surviving a non-paralyzable dead time."""
    cdef Py_ssize_t n = times.shape[0]
    cdef Py_ssize_t i
    cdef long count = 0
    cdef double next_live = -1.0
    if n == 0:
        return 0
    if tau <= 0.0:
        return n
    with nogil:
        for i in range(n):
            if times[i] >= next_live:
                count += 1
                next_live = times[i] + tau
    return count
