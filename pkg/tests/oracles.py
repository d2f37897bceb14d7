"""Independent reference computations used by the tests.

Nothing here imports the package: derivatives are central differences of
plain Python callables, Christoffel symbols come from hand-written metric
functions, and transports use a separate scalar RK4 loop.
"""

import math

import numpy as np


def central_difference(f, p, k, h=1e-5):
    p = np.asarray(p, dtype=float)
    step = np.zeros_like(p)
    step[k] = h
    return (f(p + step) - f(p - step)) / (2.0 * h)


def christoffel_fd(metric_fn, p, h=1e-5):
    """Levi-Civita symbols gamma[a, i, j] from a metric callable by finite differences."""
    p = np.asarray(p, dtype=float)
    n = p.size
    dg = np.array([central_difference(metric_fn, p, l, h) for l in range(n)])  # dg[l] = d_l g
    ginv = np.linalg.inv(metric_fn(p))
    gamma = np.zeros((n, n, n))
    for a in range(n):
        for i in range(n):
            for j in range(n):
                gamma[a, i, j] = 0.5 * sum(
                    ginv[a, l] * (dg[i][l, j] + dg[j][l, i] - dg[l][i, j]) for l in range(n)
                )
    return gamma


def sphere_metric(p):
    return np.array([[1.0, 0.0], [0.0, math.sin(p[0]) ** 2]])


def latitude_transport(phi0, steps=100_000):
    """Transport around x1 = phi0, x2 = 2 pi t, using the closed-form sphere symbols.

    X1' = sin cos * 2pi * X2, X2' = -cot * 2pi * X1 (constant along the circle).
    Returns the 2x2 transport matrix in coordinate components.
    """
    s, c = math.sin(phi0), math.cos(phi0)
    w = 2.0 * math.pi
    a12 = s * c * w
    a21 = -(c / s) * w
    h = 1.0 / steps
    cols = []
    for x1, x2 in ((1.0, 0.0), (0.0, 1.0)):
        for _ in range(steps):
            k1 = (a12 * x2, a21 * x1)
            y1, y2 = x1 + 0.5 * h * k1[0], x2 + 0.5 * h * k1[1]
            k2 = (a12 * y2, a21 * y1)
            y1, y2 = x1 + 0.5 * h * k2[0], x2 + 0.5 * h * k2[1]
            k3 = (a12 * y2, a21 * y1)
            y1, y2 = x1 + h * k3[0], x2 + h * k3[1]
            k4 = (a12 * y2, a21 * y1)
            x1 += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            x2 += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        cols.append((x1, x2))
    return np.array(cols).T


def rotation_angle(matrix, metric):
    """Signed angle of a 2x2 metric-orthogonal matrix in an orthonormal frame."""
    low = np.linalg.cholesky(metric)
    q = low.T @ matrix @ np.linalg.inv(low.T)
    return math.atan2(q[1, 0], q[0, 0])


def commutant_dim_bruteforce(mats, tol=1e-9):
    """Dimension of {X : XA = AX for all A}, by applying the map to each matrix unit."""
    k = mats[0].shape[0]
    columns = []
    for a in range(k):
        for b in range(k):
            e = np.zeros((k, k))
            e[a, b] = 1.0
            columns.append(np.concatenate([(e @ m - m @ e).ravel() for m in mats]))
    system = np.array(columns).T
    return k * k - np.linalg.matrix_rank(system, tol=tol)


def rot(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def blockdiag(*blocks):
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n))
    i = 0
    for b in blocks:
        m = b.shape[0]
        out[i:i + m, i:i + m] = b
        i += m
    return out
