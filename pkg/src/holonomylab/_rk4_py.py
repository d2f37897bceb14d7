"""Pure-Python RK4 propagation; same contract as the compiled kernel."""

import numpy as np


def rk4_propagate(gen, h, x0, record):
    gen = np.asarray(gen, dtype=float)
    x = np.array(x0, dtype=float, copy=True)
    record = np.asarray(record, dtype=np.int64)
    nsteps = (gen.shape[0] - 1) // 2
    rec = np.empty((record.size,) + x.shape)
    r = 0
    h2 = 0.5 * h
    h6 = h / 6.0
    for s in range(nsteps):
        while r < record.size and record[r] == s:
            rec[r] = x
            r += 1
        fm = gen[2 * s + 1]
        k1 = gen[2 * s] @ x
        k2 = fm @ (x + h2 * k1)
        k3 = fm @ (x + h2 * k2)
        k4 = gen[2 * s + 2] @ (x + h * k3)
        x = x + h6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    while r < record.size and record[r] == nsteps:
        rec[r] = x
        r += 1
    return x, rec
