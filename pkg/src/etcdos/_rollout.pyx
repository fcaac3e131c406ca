# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled closed-loop rollout kernel.

Mirrors ``_rollout_py.rollout`` step for step (same operation order, so
results agree with the fallback to the last few ulps); see that module
for the semantics.
"""

import numpy as np

BACKEND = "cython"


def rollout(a_eff, b, k_gain, dos_mask, double mu, x0):
    a_eff = np.ascontiguousarray(a_eff, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    k_gain = np.ascontiguousarray(k_gain, dtype=np.float64)
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    dos_u8 = np.ascontiguousarray(dos_mask, dtype=np.uint8)

    cdef Py_ssize_t steps = a_eff.shape[0]
    cdef Py_ssize_t n = a_eff.shape[1]
    cdef Py_ssize_t m = b.shape[1]

    x_hist_np = np.empty((steps + 1, n))
    held_hist_np = np.empty((steps, n))
    u_hist_np = np.empty((steps, m))
    e_hist_np = np.empty((steps, n))
    slack_np = np.empty(steps)
    event_np = np.zeros(steps, dtype=np.uint8)
    transmitted_np = np.zeros(steps, dtype=np.uint8)
    jammed_np = np.zeros(steps, dtype=np.uint8)

    cdef double[:, :, :] a = a_eff
    cdef double[:, :] bm = b
    cdef double[:, :] kg = k_gain
    cdef unsigned char[:] dos = dos_u8
    cdef double[:, :] x_hist = x_hist_np
    cdef double[:, :] held_hist = held_hist_np
    cdef double[:, :] u_hist = u_hist_np
    cdef double[:, :] e_hist = e_hist_np
    cdef double[:] slack = slack_np
    cdef unsigned char[:] event = event_np
    cdef unsigned char[:] transmitted = transmitted_np
    cdef unsigned char[:] jammed = jammed_np

    x_buf = x0.copy()
    held_buf = x0.copy()
    next_buf = np.empty(n)
    cdef double[:] x = x_buf
    cdef double[:] held = held_buf
    cdef double[:] x_next = next_buf

    cdef Py_ssize_t k, i, j
    cdef double xx, ee, e_i, gap, acc
    cdef bint fire, attacked, has_transmitted = False

    for k in range(steps):
        xx = 0.0
        ee = 0.0
        for i in range(n):
            e_i = held[i] - x[i]
            e_hist[k, i] = e_i
            xx += x[i] * x[i]
            ee += e_i * e_i
        gap = mu * xx - ee
        fire = (gap <= 0.0) or (k == 0)
        attacked = dos[k] != 0
        if fire and not attacked:
            for i in range(n):
                held[i] = x[i]
            has_transmitted = True
            transmitted[k] = 1
        elif fire:
            jammed[k] = 1
        for j in range(m):
            if has_transmitted:
                acc = 0.0
                for i in range(n):
                    acc += kg[j, i] * held[i]
                u_hist[k, j] = acc
            else:
                u_hist[k, j] = 0.0
        for i in range(n):
            x_hist[k, i] = x[i]
            held_hist[k, i] = held[i]
        slack[k] = gap
        event[k] = fire
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += a[k, i, j] * x[j]
            for j in range(m):
                acc += bm[i, j] * u_hist[k, j]
            x_next[i] = acc
        for i in range(n):
            x[i] = x_next[i]
    for i in range(n):
        x_hist[steps, i] = x[i]
    return (x_hist_np, held_hist_np, u_hist_np, e_hist_np, slack_np,
            event_np, transmitted_np, jammed_np)
