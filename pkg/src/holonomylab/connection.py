"""Connection coefficients: Levi-Civita, horizontal and adapted.

Arrays are indexed ``gamma[a, i, j]`` for the coefficient with upper index
``a`` and lower indices ``i, j`` (0-based in code).  For the adapted
connection the middle index is the derivative direction and runs over all
``n = 2m + 1`` coordinates; its slice at ``n - 1`` is identically zero.

Every field is assembled from symbolic partial derivatives of the metric
entries, evaluated in batches.  For the horizontal connection, derivatives
along the frame are ``e_l f = d_l f - c_l d_n f``.
"""

from __future__ import annotations

import numpy as np

from . import expr as ex
from .errors import SingularMetricError
from .manifold import KContactSpec, RiemannianSpec

COND_LIMIT = 1e12
KINDS = ("levi_civita", "horizontal", "adapted")


class ChristoffelField:
    """Coefficient field of one connection on one spec.

    Derivative trees are built once; :meth:`coeffs` and :meth:`generator`
    evaluate them on a batch of points.
    """

    def __init__(self, spec, kind: str | None = None):
        if kind is None:
            kind = "levi_civita" if isinstance(spec, RiemannianSpec) else "adapted"
        if kind not in KINDS:
            raise ValueError(f"unknown connection kind {kind!r}")
        if (kind == "levi_civita") != isinstance(spec, RiemannianSpec):
            raise TypeError(f"{kind} connection does not apply to a {spec.kind} spec")
        self.spec = spec
        self.kind = kind
        k = spec.fiber_dim
        self.k = k
        self._metric = [e for row in spec.metric for e in row]
        # _partials[l][i*k + j] = d_l g_ij
        self._partials = [[ex.differentiate(e, l) for e in self._metric] for l in range(1, k + 1)]
        if isinstance(spec, KContactSpec):
            n = spec.dim
            self._vertical = [ex.differentiate(e, n) for e in self._metric]
            self._contact = list(spec.contact_coeffs)
        else:
            self._vertical = None
            self._contact = None

    def metric(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        vals = ex.evaluate_many(self._metric, pts)
        return np.stack(vals, axis=-1).reshape(pts.shape[0], self.k, self.k)

    def metric_derivatives(self, points) -> np.ndarray:
        """``dg[p, l, i, j]``: frame (or coordinate) derivative ``D_l g_ij``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        P, k = pts.shape[0], self.k
        dg = np.empty((P, k, k, k))
        for l, row in enumerate(self._partials):
            dg[:, l] = np.stack(ex.evaluate_many(row, pts), axis=-1).reshape(P, k, k)
        if self._vertical is not None:
            dn = np.stack(ex.evaluate_many(self._vertical, pts), axis=-1).reshape(P, k, k)
            c = np.stack(ex.evaluate_many(self._contact, pts), axis=-1)
            dg -= c[:, :, None, None] * dn[:, None, :, :]
        return dg

    def _horizontal(self, pts):
        g = self.metric(pts)
        cond = np.linalg.cond(g)
        bad = ~(cond <= COND_LIMIT)
        if bad.any():
            idx = int(np.flatnonzero(bad)[0])
            raise SingularMetricError(
                f"metric of {self.spec.name} has condition number {cond[idx]:.3g} at {tuple(pts[idx])}"
            )
        dg = self.metric_derivatives(pts)
        # t[p, l, i, j] = D_i g_lj + D_j g_li - D_l g_ij
        t = np.einsum("pilj->plij", dg) + np.einsum("pjli->plij", dg) - dg
        P, k = pts.shape[0], self.k
        gamma = 0.5 * np.linalg.solve(g, t.reshape(P, k, k * k))
        return gamma.reshape(P, k, k, k), g

    def coeffs(self, points) -> np.ndarray:
        """Coefficient arrays at every row of ``points``.

        Shape ``(P, k, k, k)`` for Levi-Civita and horizontal kinds,
        ``(P, k, n, k)`` for the adapted kind.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        gamma, _ = self._horizontal(pts)
        if self.kind != "adapted":
            return gamma
        P, k = gamma.shape[0], self.k
        out = np.zeros((P, k, k + 1, k))
        out[:, :, :k, :] = gamma
        return out

    def generator(self, points, velocities):
        """Right-hand side matrices of the transport ODE ``X' = F X``.

        ``F[p, a, b] = -sum_d gamma[a, d, b] * v[d]`` with the sum over the
        first ``k`` velocity components (the vertical velocity of an adapted
        curve multiplies a vanishing coefficient).  Also returns the fiber
        metric at the points.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        vel = np.atleast_2d(np.asarray(velocities, dtype=float))[:, : self.k]
        gamma, g = self._horizontal(pts)
        return -np.einsum("padb,pd->pab", gamma, vel), g


def levi_civita_coeffs(spec: RiemannianSpec, p) -> np.ndarray:
    """Levi-Civita coefficients ``gamma[a, i, j]`` of ``spec`` at ``p``."""
    return ChristoffelField(spec, "levi_civita").coeffs(p)[0]


def horizontal_coeffs(spec: KContactSpec, p) -> np.ndarray:
    """Horizontal-connection coefficients ``gamma[a, i, j]``, indices in 1..2m."""
    return ChristoffelField(spec, "horizontal").coeffs(p)[0]


def adapted_coeffs(spec: KContactSpec, p) -> np.ndarray:
    """Adapted-connection coefficients ``gamma[a, d, j]``; ``gamma[:, n-1, :] == 0``."""
    return ChristoffelField(spec, "adapted").coeffs(p)[0]


def frame_derivative(spec: KContactSpec, e, i: int, p) -> float:
    """Derivative of ``e`` along the frame field ``e_i`` at ``p`` (``i`` is 1-based)."""
    if not 1 <= i <= spec.fiber_dim:
        raise ValueError(f"frame index must lie in 1..{spec.fiber_dim}")
    e = ex.as_expr(e)
    n = spec.dim
    return ex.evaluate(ex.differentiate(e, i), p) - ex.evaluate(spec.contact_coeffs[i - 1], p) * ex.evaluate(
        ex.differentiate(e, n), p
    )
