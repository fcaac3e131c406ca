"""Pure-Python (numpy) closed-loop rollout kernel.

Reference semantics for the compiled kernel in ``_rollout.pyx``; selected
automatically when the extension is not built. Per step k:

1. e <- held - x                       (error against the held sample)
2. event <- (mu ||x||^2 - ||e||^2 <= 0), forced True at k = 0
3. transmit iff event and channel free; jammed iff event under attack
4. u <- K @ held once a transmission has ever succeeded, else 0
5. x <- A_eff[k] @ x + B @ u

``a_eff`` already contains A + DeltaA(k) for every step.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def rollout(a_eff: np.ndarray, b: np.ndarray, k_gain: np.ndarray,
            dos_mask: np.ndarray, mu: float, x0: np.ndarray):
    steps, n, _ = a_eff.shape
    m = b.shape[1]
    x_hist = np.empty((steps + 1, n))
    held_hist = np.empty((steps, n))
    u_hist = np.empty((steps, m))
    e_hist = np.empty((steps, n))
    slack = np.empty(steps)
    event = np.zeros(steps, dtype=np.uint8)
    transmitted = np.zeros(steps, dtype=np.uint8)
    jammed = np.zeros(steps, dtype=np.uint8)

    x = x0.astype(float).copy()
    held = x0.astype(float).copy()
    zero_u = np.zeros(m)
    has_transmitted = False
    for k in range(steps):
        e = held - x
        gap = mu * float(x @ x) - float(e @ e)
        fire = (gap <= 0.0) or (k == 0)
        attacked = bool(dos_mask[k])
        if fire and not attacked:
            held = x.copy()
            has_transmitted = True
            transmitted[k] = 1
        elif fire:
            jammed[k] = 1
        u = k_gain @ held if has_transmitted else zero_u
        x_hist[k] = x
        held_hist[k] = held
        u_hist[k] = u
        e_hist[k] = e
        slack[k] = gap
        event[k] = fire
        x = a_eff[k] @ x + b @ u
    x_hist[steps] = x
    return x_hist, held_hist, u_hist, e_hist, slack, event, transmitted, jammed
