"""Chart-level manifold descriptions and their structural checks.

A :class:`RiemannianSpec` carries a metric ``h_ij(x)`` on an n-dimensional
coordinate box.  A :class:`KContactSpec` carries, in adapted coordinates
``x1..x(2m), xn`` with Reeb field ``d/dxn``, the horizontal metric
``g_ij = g(e_i, e_j)`` and the contact coefficients ``c_i`` of
``theta = dxn + c_i dx^i``.  The horizontal frame is
``e_i = d/dx^i - c_i d/dxn``.

Note: holonomy of the adapted connection acts on the contact fiber
``D_x = ker theta``, which is therefore what gets decomposed; a
decomposition of the full tangent space ``T_xM`` is never formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import expr as ex
from .errors import ConfigError, NotKContactError, NotPositiveDefiniteError

PD_THRESHOLD = 1e-10
RESIDUAL_TOL = 1e-12
CONTACT_THRESHOLD = 1e-10
DEFAULT_SAMPLES = 200
DEFAULT_VALIDATION_SEED = 0


def _expr_matrix(rows, k: int, dim: int) -> tuple[tuple[ex.Expr, ...], ...]:
    """Accept a k*k row-major list or a k-list of rows, of strings or trees."""
    flat = list(rows)
    if len(flat) == k and all(isinstance(r, (list, tuple)) for r in flat):
        flat = [e for r in flat for e in r]
    if len(flat) != k * k:
        raise ConfigError(f"metric needs {k * k} entries, got {len(flat)}")
    parsed = [ex.parse(e, dim=dim) if isinstance(e, str) else ex.as_expr(e) for e in flat]
    return tuple(tuple(parsed[i * k:(i + 1) * k]) for i in range(k))


def _box(domain_box, dim: int) -> tuple[tuple[float, float], ...]:
    box = tuple((float(lo), float(hi)) for lo, hi in domain_box)
    if len(box) != dim:
        raise ConfigError(f"domain_box needs {dim} intervals, got {len(box)}")
    for lo, hi in box:
        if not lo < hi:
            raise ConfigError(f"empty interval ({lo}, {hi}) in domain_box")
    return box


@dataclass(frozen=True)
class RiemannianSpec:
    """Metric ``h_ij(x)`` on a coordinate box of dimension ``dim``.

    ``blocks`` optionally declares a product structure as a partition of
    the 1-based coordinate indices.
    """

    dim: int
    metric: tuple[tuple[ex.Expr, ...], ...]
    domain_box: tuple[tuple[float, float], ...]
    name: str = "riemannian"
    blocks: tuple[tuple[int, ...], ...] | None = None

    kind = "riemannian"

    @classmethod
    def from_strings(cls, metric, domain_box, name="riemannian", blocks=None):
        box = _box(domain_box, len(domain_box))
        n = len(box)
        blocks = None if blocks is None else tuple(tuple(int(i) for i in b) for b in blocks)
        return cls(n, _expr_matrix(metric, n, n), box, name, blocks)

    @property
    def fiber_dim(self) -> int:
        return self.dim

    @property
    def chart_dim(self) -> int:
        return self.dim


@dataclass(frozen=True)
class KContactSpec:
    """K-contact sub-Riemannian structure in one adapted chart of dimension 2m+1."""

    m: int
    horizontal_metric: tuple[tuple[ex.Expr, ...], ...]
    contact_coeffs: tuple[ex.Expr, ...]
    domain_box: tuple[tuple[float, float], ...]
    name: str = "kcontact"

    kind = "kcontact"

    @classmethod
    def from_strings(cls, m, metric, contact_coeffs, domain_box, name="kcontact"):
        n = 2 * m + 1
        box = _box(domain_box, n)
        coeffs = tuple(ex.parse(c, dim=n) if isinstance(c, str) else ex.as_expr(c) for c in contact_coeffs)
        if len(coeffs) != 2 * m:
            raise ConfigError(f"contact_coeffs needs {2 * m} entries, got {len(coeffs)}")
        return cls(m, _expr_matrix(metric, 2 * m, n), coeffs, box, name)

    @property
    def dim(self) -> int:
        return 2 * self.m + 1

    @property
    def fiber_dim(self) -> int:
        return 2 * self.m

    @property
    def chart_dim(self) -> int:
        return self.dim

    @property
    def metric(self):
        return self.horizontal_metric

    @property
    def frame(self) -> "FrameBasis":
        return FrameBasis(self)


@dataclass(frozen=True)
class FrameBasis:
    """Horizontal frame ``e_i = d_i - c_i d_n`` of the contact distribution."""

    spec: KContactSpec

    def components(self, point) -> np.ndarray:
        """``(2m, n)`` matrix whose row i holds the coordinate components of e_i."""
        k, n = self.spec.fiber_dim, self.spec.dim
        out = np.zeros((k, n))
        out[:, :k] = np.eye(k)
        out[:, n - 1] = [-ex.evaluate(c, point) for c in self.spec.contact_coeffs]
        return out

    def contact_form(self, point) -> np.ndarray:
        """Components of ``theta`` at ``point``."""
        theta = np.empty(self.spec.dim)
        theta[:-1] = [ex.evaluate(c, point) for c in self.spec.contact_coeffs]
        theta[-1] = 1.0
        return theta


Spec = RiemannianSpec | KContactSpec


def _metric_batch(spec: Spec, points: np.ndarray) -> np.ndarray:
    k = spec.fiber_dim
    flat = [e for row in spec.metric for e in row]
    vals = ex.evaluate_many(flat, points)
    return np.stack(vals, axis=-1).reshape(points.shape[0], k, k)


def metric_batch(spec: Spec, points) -> np.ndarray:
    """Fiber metric at each row of ``points``: shape ``(P, k, k)``."""
    return _metric_batch(spec, np.atleast_2d(np.asarray(points, dtype=float)))


def _eval_metric(spec, point, pd_threshold):
    p = np.asarray(point, dtype=float)
    if p.shape != (spec.chart_dim,):
        raise ValueError(f"point must have {spec.chart_dim} coordinates")
    g = _metric_batch(spec, p[np.newaxis, :])[0]
    lam = np.linalg.eigvalsh(0.5 * (g + g.T))[0]
    if lam <= pd_threshold:
        raise NotPositiveDefiniteError(
            f"metric of {spec.name} not positive definite at {tuple(p)} (smallest eigenvalue {lam:.3g})"
        )
    return g


def eval_riemannian_metric(spec: RiemannianSpec, p, pd_threshold: float = PD_THRESHOLD) -> np.ndarray:
    return _eval_metric(spec, p, pd_threshold)


def eval_horizontal_metric(spec: KContactSpec, p, pd_threshold: float = PD_THRESHOLD) -> np.ndarray:
    return _eval_metric(spec, p, pd_threshold)


# ---------------------------------------------------------------------------
# validation


@dataclass
class ConditionResult:
    name: str
    passed: bool
    residual: float
    threshold: float
    witness: tuple[float, ...] | None
    detail: str = ""

    def as_dict(self):
        return {
            "condition": self.name,
            "passed": self.passed,
            "residual": self.residual,
            "threshold": self.threshold,
            "witness": None if self.witness is None else list(self.witness),
            "detail": self.detail,
        }


@dataclass
class ValidationReport:
    spec_name: str
    kind: str
    samples: int
    seed: int
    conditions: list[ConditionResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def __getitem__(self, name) -> ConditionResult:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def failed(self) -> list[str]:
        return [c.name for c in self.conditions if not c.passed]


def sample_points(box, samples: int, seed: int) -> np.ndarray:
    """Uniform points strictly inside ``box``, reproducible from ``seed``."""
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    u = rng.random((samples, len(box)))
    # keep off the open boundary
    u = 1e-9 + (1.0 - 2e-9) * u
    return lo + u * (hi - lo)


def _max_abs(values: np.ndarray, points: np.ndarray):
    """Worst absolute value over samples and its witness point."""
    flat = np.abs(values).reshape(values.shape[0], -1).max(axis=1)
    idx = int(np.argmax(flat))
    return float(flat[idx]), tuple(float(v) for v in points[idx])


def validate(
    spec: Spec,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_VALIDATION_SEED,
    pd_threshold: float = PD_THRESHOLD,
    residual_tol: float = RESIDUAL_TOL,
    contact_threshold: float = CONTACT_THRESHOLD,
) -> ValidationReport:
    """Check the structural conditions of ``spec`` at seeded sample points.

    Failures are report entries, never exceptions.  Conditions:
    ``symmetry`` and ``positive_definite`` for every spec, plus ``contact``
    (nondegenerate d(theta) on D), ``reeb`` (d_n c_i = 0) and ``k_contact``
    (d_n g_ij = 0) for K-contact specs.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    pts = sample_points(spec.domain_box, samples, seed)
    report = ValidationReport(spec.name, spec.kind, samples, seed)
    k = spec.fiber_dim

    try:
        g = _metric_batch(spec, pts)
    except ex.ExprDomainError as err:
        report.conditions.append(
            ConditionResult("evaluable", False, float("nan"), 0.0, _witness(err), str(err))
        )
        return report

    res, wit = _max_abs(g - np.swapaxes(g, 1, 2), pts)
    report.conditions.append(ConditionResult("symmetry", res <= residual_tol, res, residual_tol, wit))

    lam = np.linalg.eigvalsh(0.5 * (g + np.swapaxes(g, 1, 2)))[:, 0]
    idx = int(np.argmin(lam))
    report.conditions.append(
        ConditionResult(
            "positive_definite",
            bool(lam[idx] > pd_threshold),
            float(lam[idx]),
            pd_threshold,
            tuple(float(v) for v in pts[idx]),
            "smallest eigenvalue",
        )
    )

    if isinstance(spec, KContactSpec):
        n = spec.dim
        coeffs = spec.contact_coeffs
        try:
            dcoef = np.stack(
                [np.stack(ex.evaluate_many([ex.differentiate(c, j) for j in range(1, k + 1)], pts), -1) for c in coeffs],
                axis=1,
            )  # dcoef[p, i, j] = d_j c_i
            dtheta = np.swapaxes(dcoef, 1, 2) - dcoef  # d_i c_j - d_j c_i
            det = np.abs(np.linalg.det(dtheta))
            idx = int(np.argmin(det))
            report.conditions.append(
                ConditionResult(
                    "contact",
                    bool(det[idx] > contact_threshold),
                    float(det[idx]),
                    contact_threshold,
                    tuple(float(v) for v in pts[idx]),
                    "|det d(theta)| on D",
                )
            )
            reeb = np.stack(ex.evaluate_many([ex.differentiate(c, n) for c in coeffs], pts), -1)
            res, wit = _max_abs(reeb, pts)
            report.conditions.append(
                ConditionResult("reeb", res < residual_tol or res == 0.0, res, residual_tol, wit, "max |d_n c_i|")
            )
            flat = [ex.differentiate(e, n) for row in spec.metric for e in row]
            dg = np.stack(ex.evaluate_many(flat, pts), -1)
            res, wit = _max_abs(dg, pts)
            report.conditions.append(
                ConditionResult("k_contact", res < residual_tol or res == 0.0, res, residual_tol, wit, "max |d_n g_ij|")
            )
        except ex.ExprDomainError as err:
            report.conditions.append(
                ConditionResult("evaluable", False, float("nan"), 0.0, _witness(err), str(err))
            )
    return report


def _witness(err):
    return None if err.point is None else tuple(float(v) for v in err.point)


def check_k_contact(spec: KContactSpec, samples: int = DEFAULT_SAMPLES, seed: int = DEFAULT_VALIDATION_SEED,
                    residual_tol: float = RESIDUAL_TOL) -> ConditionResult:
    n = spec.dim
    pts = sample_points(spec.domain_box, samples, seed)
    flat = [ex.differentiate(e, n) for row in spec.metric for e in row]
    dg = np.stack(ex.evaluate_many(flat, pts), -1)
    res, wit = _max_abs(dg, pts)
    return ConditionResult("k_contact", res < residual_tol or res == 0.0, res, residual_tol, wit, "max |d_n g_ij|")


def quotient_metric(spec: KContactSpec, samples: int = DEFAULT_SAMPLES, seed: int = DEFAULT_VALIDATION_SEED) -> RiemannianSpec:
    """Induced metric on the Reeb orbit space, by dropping the vertical coordinate.

    The horizontal metric entries must not depend on ``xn`` (checked on
    samples); ``xn`` is then set to zero in every entry.
    """
    check = check_k_contact(spec, samples, seed)
    if not check.passed:
        raise NotKContactError(
            f"{spec.name} fails the K-contact condition (residual {check.residual:.3g} at {check.witness})"
        )
    n = spec.dim
    k = spec.fiber_dim
    metric = tuple(tuple(ex.substitute(e, n, ex.ZERO) for e in row) for row in spec.metric)
    return RiemannianSpec(k, metric, spec.domain_box[:k], name=f"{spec.name}/quotient")


def project(spec: KContactSpec, point) -> np.ndarray:
    """Projection to the orbit space in adapted coordinates: drop ``xn``."""
    return np.asarray(point, dtype=float)[: spec.fiber_dim].copy()


def in_box(box: Sequence[tuple[float, float]], points) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    return np.all((pts > lo) & (pts < hi), axis=1)


def validate_partition(spec: RiemannianSpec) -> tuple[tuple[int, ...], ...]:
    """Check that ``spec.blocks`` is a product structure of the metric."""
    from .errors import PartitionError

    blocks = spec.blocks or (tuple(range(1, spec.dim + 1)),)
    seen = sorted(i for b in blocks for i in b)
    if seen != list(range(1, spec.dim + 1)):
        raise PartitionError(f"blocks {blocks} do not partition coordinates 1..{spec.dim}")
    owner = {i: bi for bi, b in enumerate(blocks) for i in b}
    for i in range(spec.dim):
        for j in range(spec.dim):
            e = spec.metric[i][j]
            if owner[i + 1] != owner[j + 1]:
                if not ex.is_zero(e):
                    raise PartitionError(f"off-block metric entry ({i + 1},{j + 1}) is {ex.to_source(e)}")
                continue
            stray = ex.variables(e) - set(blocks[owner[i + 1]])
            if stray:
                raise PartitionError(
                    f"metric entry ({i + 1},{j + 1}) depends on x{min(stray)} outside its block"
                )
    return tuple(tuple(b) for b in blocks)
