"""Parallel transport along piecewise-smooth chart curves.

Curves are lists of segments whose coordinates are expression trees in the
single parameter ``t`` (stored as ``x1`` of a one-dimensional chart), so
velocities are exact.  Transport integrates ``X' = F(t) X`` for the matrix
of transported basis vectors with fixed-step classical RK4.  Transported
frames are never re-orthonormalised during integration; drift of the fiber
metric is measured and reported instead.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import expr as ex
from .connection import ChristoffelField
from .errors import ConfigError, CurveDomainError, InputError
from .kernels import rk4_propagate
from .manifold import KContactSpec, RiemannianSpec, in_box

T_NAMES = {1: "t"}
CLOSE_TOL = 1e-12
MIN_STEPS_PER_UNIT = 16
DEFAULT_STEPS = 512
CHECKPOINTS = 10


@dataclass(frozen=True)
class Segment:
    coords: tuple[ex.Expr, ...]
    t_range: tuple[float, float]

    @classmethod
    def from_strings(cls, coords: Sequence[str], t_range) -> "Segment":
        a, b = (float(v) for v in t_range)
        if b < a:
            raise ConfigError(f"segment t_range ({a}, {b}) is decreasing")
        return cls(tuple(ex.parse(c, dim=1, aliases={"t": 1}) for c in coords), (a, b))

    @classmethod
    def line(cls, p, q) -> "Segment":
        """Unit coordinate-speed segment from ``p`` to ``q`` on ``[0, |q - p|]``."""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        length = float(np.linalg.norm(q - p))
        if length == 0.0:
            return cls(tuple(ex.Num(float(v)) for v in p), (0.0, 0.0))
        d = (q - p) / length
        t = ex.Var(1)
        coords = tuple(
            ex.Num(float(pi)) if di == 0.0 else ex.BinOp("+", ex.Num(float(pi)), ex.BinOp("*", ex.Num(float(di)), t))
            for pi, di in zip(p, d)
        )
        return cls(coords, (0.0, length))

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def length(self) -> float:
        return self.t_range[1] - self.t_range[0]

    @cached_property
    def velocity(self) -> tuple[ex.Expr, ...]:
        return tuple(ex.differentiate(c, 1) for c in self.coords)

    def points(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float).reshape(-1, 1)
        return np.stack(ex.evaluate_many(self.coords, ts), axis=-1)

    def velocities(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float).reshape(-1, 1)
        return np.stack(ex.evaluate_many(self.velocity, ts), axis=-1)

    @property
    def start(self) -> np.ndarray:
        return self.points([self.t_range[0]])[0]

    @property
    def end(self) -> np.ndarray:
        return self.points([self.t_range[1]])[0]

    def reversed(self) -> "Segment":
        a, b = self.t_range
        flipped = ex.BinOp("-", ex.Num(a + b), ex.Var(1))
        return Segment(tuple(ex.substitute(c, 1, flipped) for c in self.coords), self.t_range)

    def to_config(self) -> dict:
        return {"coords": [ex.to_source(c, T_NAMES) for c in self.coords], "t_range": list(self.t_range)}


@dataclass(frozen=True)
class Curve:
    """Piecewise-smooth curve; consecutive segments must meet."""

    segments: tuple[Segment, ...]

    def __post_init__(self):
        if not self.segments:
            raise InputError("a curve needs at least one segment")
        dims = {s.dim for s in self.segments}
        if len(dims) != 1:
            raise InputError(f"segments have mixed dimensions {sorted(dims)}")
        for i, (s, nxt) in enumerate(zip(self.segments, self.segments[1:])):
            gap = float(np.max(np.abs(s.end - nxt.start)))
            if gap > CLOSE_TOL:
                raise InputError(f"segments {i} and {i + 1} do not meet (gap {gap:.3g})")

    @classmethod
    def polyline(cls, vertices) -> "Curve":
        v = np.asarray(vertices, dtype=float)
        return cls(tuple(Segment.line(p, q) for p, q in zip(v[:-1], v[1:])))

    @classmethod
    def from_config(cls, entries) -> "Curve":
        if isinstance(entries, str):
            return generator(entries)
        segs = []
        for entry in entries:
            extra = set(entry) - {"coords", "t_range"}
            if extra:
                raise ConfigError(f"unknown curve segment fields {sorted(extra)}")
            segs.append(Segment.from_strings(entry["coords"], entry["t_range"]))
        return cls(tuple(segs))

    def to_config(self) -> list:
        return [s.to_config() for s in self.segments]

    @property
    def dim(self) -> int:
        return self.segments[0].dim

    @property
    def start(self) -> np.ndarray:
        return self.segments[0].start

    @property
    def end(self) -> np.ndarray:
        return self.segments[-1].end

    @property
    def parameter_length(self) -> float:
        return sum(s.length for s in self.segments)

    def closure_gap(self) -> float:
        return float(np.max(np.abs(self.end - self.start)))

    def is_closed(self, tol: float = CLOSE_TOL) -> bool:
        return self.closure_gap() <= tol

    def reversed(self) -> "Curve":
        return Curve(tuple(s.reversed() for s in reversed(self.segments)))

    def then(self, other: "Curve") -> "Curve":
        return Curve(self.segments + other.segments)

    __add__ = then

    def metric_length(self, spec, samples_per_segment: int = 64) -> float:
        """Length of the curve measured by the fiber metric of ``spec`` (horizontal part)."""
        from .manifold import metric_batch

        k = spec.fiber_dim
        total = 0.0
        for seg in self.segments:
            if seg.length == 0.0:
                continue
            ts = np.linspace(seg.t_range[0], seg.t_range[1], samples_per_segment + 1)
            g = metric_batch(spec, seg.points(ts))
            v = seg.velocities(ts)[:, :k]
            speed = np.sqrt(np.maximum(np.einsum("pi,pij,pj->p", v, g, v), 0.0))
            total += float(np.trapezoid(speed, ts) if hasattr(np, "trapezoid") else np.trapz(speed, ts))
        return total


def latitude(phi0: float, lon0: float = 0.0, turns: float = 1.0) -> Curve:
    """Circle ``x1 = phi0`` traversed ``turns`` times, ``x2 = lon0 + 2 pi t`` for ``t`` in ``[0, turns]``."""
    t = ex.Var(1)
    x2 = ex.BinOp("+", ex.Num(float(lon0)), ex.BinOp("*", ex.BinOp("*", ex.Num(2.0), ex.PI), t))
    return Curve((Segment((ex.Num(float(phi0)), x2), (0.0, float(turns))),))


def rectangle(i: int, j: int, center, w: float, h: float) -> Curve:
    """Counter-clockwise rectangle in the coordinate plane ``(x_i, x_j)``, starting at its lower-left corner."""
    c = np.asarray(center, dtype=float)
    ei = np.zeros_like(c)
    ej = np.zeros_like(c)
    ei[i - 1] = 1.0
    ej[j - 1] = 1.0
    c0 = c - 0.5 * w * ei - 0.5 * h * ej
    return Curve.polyline([c0, c0 + w * ei, c0 + w * ei + h * ej, c0 + h * ej, c0])


_GEN_RE = re.compile(r"^\s*([a-z_]+)\s*\((.*)\)\s*$", re.S)


def _split_args(text: str) -> list[str]:
    args, depth, cur = [], 0, []
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == "," and depth == 0:
            args.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if "".join(cur).strip():
        args.append("".join(cur).strip())
    return args


def _number(text: str):
    text = text.strip()
    if text.startswith("["):
        return [_number(a) for a in _split_args(text[1:-1])]
    return ex.evaluate(ex.parse(text, dim=0), np.zeros(0))


def generator(text: str) -> Curve:
    """Build a curve from ``"latitude(phi0)"`` or ``"rectangle(i, j, [c...], w, h)"``."""
    m = _GEN_RE.match(text)
    if m is None:
        raise ConfigError(f"cannot read curve generator {text!r}")
    name, args = m.group(1), [_number(a) for a in _split_args(m.group(2))]
    try:
        if name == "latitude":
            return latitude(*args)
        if name == "rectangle":
            i, j, center, w, h = args
            return rectangle(int(i), int(j), center, w, h)
    except TypeError as err:
        raise ConfigError(f"bad arguments for {name}: {err}") from None
    raise ConfigError(f"unknown curve generator {name!r}")


# ---------------------------------------------------------------------------
# transport


@dataclass
class TransportResult:
    """Transport matrix in fiber components plus integration diagnostics.

    Column ``c`` of ``matrix`` is the transport of the ``c``-th basis
    vector (coordinate basis for Levi-Civita, frame ``e_i`` for adapted).
    ``metric_drift`` is the largest entry of ``|X^T G(t) X - G(start)|``
    over checkpoints.
    """

    matrix: np.ndarray
    metric_drift: float
    steps_used: int
    kind: str
    start_metric: np.ndarray
    end_metric: np.ndarray
    error_estimate: float | None = None

    def orthogonality_defect(self, metric=None) -> float:
        g = self.start_metric if metric is None else np.asarray(metric)
        m = self.matrix
        return float(np.max(np.abs(m.T @ g @ m - g)))


def _checkpoint_steps(nsteps: int) -> np.ndarray:
    return np.unique(np.round(np.linspace(0, nsteps, CHECKPOINTS)).astype(np.int64))


def _transport(cfield: ChristoffelField, curve: Curve, steps_per_unit: int, box) -> TransportResult:
    if steps_per_unit < MIN_STEPS_PER_UNIT:
        raise ValueError(f"steps_per_unit must be >= {MIN_STEPS_PER_UNIT}")
    spec = cfield.spec
    if curve.dim != spec.chart_dim:
        raise InputError(f"curve has dimension {curve.dim}, chart has {spec.chart_dim}")
    k = cfield.k
    x = np.eye(k)
    g_start = None
    g_end = None
    drift = 0.0
    steps_used = 0
    for seg in curve.segments:
        if g_start is None:
            _check_inside(seg, [seg.t_range[0]], box)
            g_start = cfield.metric(seg.start)[0]
            g_end = g_start
        nsteps = math.ceil(steps_per_unit * seg.length) if seg.length > 0.0 else 0
        if nsteps == 0:
            continue
        h = seg.length / nsteps
        ts = seg.t_range[0] + 0.5 * h * np.arange(2 * nsteps + 1)
        pts = _check_inside(seg, ts, box)
        gen, g = cfield.generator(pts, seg.velocities(ts))
        record = _checkpoint_steps(nsteps)
        x, rec = rk4_propagate(np.ascontiguousarray(gen), h, np.ascontiguousarray(x), record)
        gram = np.einsum("rai,rab,rbj->rij", rec, g[2 * record], rec)
        drift = max(drift, float(np.max(np.abs(gram - g_start))))
        g_end = g[-1]
        steps_used += nsteps
    return TransportResult(x, drift, steps_used, cfield.kind, g_start, g_end)


def _check_inside(seg: Segment, ts, box) -> np.ndarray:
    pts = seg.points(ts)
    inside = in_box(box, pts)
    if not inside.all():
        idx = int(np.flatnonzero(~inside)[0])
        raise CurveDomainError(f"curve leaves the domain box at {tuple(float(v) for v in pts[idx])}", float(ts[idx]))
    return pts


def _field(spec) -> ChristoffelField:
    return ChristoffelField(spec, "levi_civita" if isinstance(spec, RiemannianSpec) else "adapted")


def transport(spec, curve: Curve, steps_per_unit: int = DEFAULT_STEPS, estimate_error: bool = False,
              cfield: ChristoffelField | None = None) -> TransportResult:
    """Transport along ``curve`` with the natural connection of ``spec``."""
    cfield = cfield or _field(spec)
    result = _transport(cfield, curve, steps_per_unit, spec.domain_box)
    if estimate_error:
        fine = _transport(cfield, curve, 2 * steps_per_unit, spec.domain_box)
        result.error_estimate = float(np.max(np.abs(result.matrix - fine.matrix)))
    return result


def transport_riemannian(spec: RiemannianSpec, c: Curve, steps_per_unit: int = DEFAULT_STEPS,
                         estimate_error: bool = False) -> TransportResult:
    """Levi-Civita transport of the coordinate basis along ``c``."""
    if not isinstance(spec, RiemannianSpec):
        raise TypeError("transport_riemannian needs a RiemannianSpec")
    return transport(spec, c, steps_per_unit, estimate_error)


def transport_adapted(spec: KContactSpec, c: Curve, steps_per_unit: int = DEFAULT_STEPS,
                      estimate_error: bool = False) -> TransportResult:
    """Adapted-connection transport of the horizontal frame along ``c``."""
    if not isinstance(spec, KContactSpec):
        raise TypeError("transport_adapted needs a KContactSpec")
    return transport(spec, c, steps_per_unit, estimate_error)


def richardson_check(spec, c: Curve, steps: int = DEFAULT_STEPS) -> float:
    """A posteriori error estimate: largest entry of ``|M(steps) - M(2 steps)|``."""
    cfield = _field(spec)
    coarse = _transport(cfield, c, steps, spec.domain_box)
    fine = _transport(cfield, c, 2 * steps, spec.domain_box)
    return float(np.max(np.abs(coarse.matrix - fine.matrix)))


def lift_loop(spec: KContactSpec, mu: Curve, vertical_value: float = 0.0) -> Curve:
    """Lift a quotient curve by holding the vertical coordinate at ``vertical_value``."""
    if mu.dim != spec.fiber_dim:
        raise InputError(f"quotient curve must have dimension {spec.fiber_dim}, got {mu.dim}")
    xn = ex.Num(float(vertical_value))
    return Curve(tuple(Segment(s.coords + (xn,), s.t_range) for s in mu.segments))


def project_to_isometries(matrix, metric) -> np.ndarray:
    """Nearest ``metric``-orthogonal matrix in the orthonormalised frame (polar factor).

    Separate from transport on purpose; integrator drift stays visible
    unless a caller opts into this projection.
    """
    low = np.linalg.cholesky(np.asarray(metric, dtype=float))
    q = low.T @ np.asarray(matrix, dtype=float) @ np.linalg.inv(low.T)
    u, _, vt = np.linalg.svd(q)
    return np.linalg.inv(low.T) @ (u @ vt) @ low.T
