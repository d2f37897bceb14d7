"""Sampled holonomy groups and their orthogonal invariant decompositions.

Holonomy matrices act on the fiber in frame (or coordinate) components and
preserve the fiber metric ``G`` at the base point.  With ``G = L L^T`` the
conjugates ``Q = L^T M L^-T`` are orthogonal; all linear algebra below
runs on those.

A finite sample only probes a subgroup, so a single-block decomposition
means "no splitting found at these samples", not a proof of irreducibility.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .connection import ChristoffelField
from .errors import ClusteringAmbiguityError, EmptySampleError, ScaleError
from .manifold import RiemannianSpec, in_box
from .transport import DEFAULT_STEPS, Curve, transport

SVD_TOL = 1e-6
DRIFT_FLAG = 1e-6
LOG_EXCLUSION = 0.1
MAX_BRACKET_ROUNDS = 3


@dataclass(frozen=True)
class RectLoop:
    """Parameters of one rectangle loop, closed to the base point along coordinate lines."""

    plane: tuple[int, int]
    corner: tuple[float, float]
    width: float
    height: float


@dataclass
class LoopFamily:
    base: np.ndarray
    loops: list[RectLoop]
    curves: list[Curve]

    def __len__(self):
        return len(self.curves)

    def add_curve(self, curve: Curve) -> None:
        """Append a user loop (not described by rectangle parameters)."""
        if not curve.is_closed() or np.max(np.abs(curve.start - self.base)) > 1e-12:
            raise ValueError("user loops must start and end at the base point")
        self.curves.append(curve)


def rectangle_loop(base, plane, corner, width, height) -> Curve:
    """Rectangle in ``plane`` with lower-left ``corner``, joined to ``base`` by an out-and-back connector."""
    a, b = plane
    base = np.asarray(base, dtype=float)
    p1 = base.copy()
    p1[a - 1] = corner[0]
    c0 = p1.copy()
    c0[b - 1] = corner[1]
    c1 = c0.copy()
    c1[a - 1] += width
    c2 = c1.copy()
    c2[b - 1] += height
    c3 = c0.copy()
    c3[b - 1] += height
    return Curve.polyline([base, p1, c0, c1, c2, c3, c0, p1, base])


def generate_loops(spec, base, count: int, scale: float, seed: int, reach: float | None = None) -> LoopFamily:
    """Seeded family of ``count`` rectangle loops at ``base``.

    Loop ``i`` lies in the ``i``-th coordinate plane (cycling through all
    pairs of fiber coordinates), has sides drawn from ``(0, scale]`` and a
    centre drawn uniformly inside the domain box, optionally restricted to
    ``base +- reach``.
    """
    base = np.asarray(base, dtype=float)
    box = spec.domain_box
    if not in_box(box, base)[0]:
        raise ValueError(f"base point {tuple(base)} is not inside the domain box")
    k = spec.fiber_dim
    planes = list(itertools.combinations(range(1, k + 1), 2))
    rng = np.random.default_rng(seed)
    loops, curves = [], []
    for i in range(count):
        a, b = planes[i % len(planes)]
        sides = scale * (1.0 - rng.random(2))
        u = rng.random(2)
        corner = []
        for axis, side, ui in zip((a, b), sides, u):
            lo, hi = box[axis - 1]
            if reach is not None:
                lo = max(lo, base[axis - 1] - reach)
                hi = min(hi, base[axis - 1] + reach)
            if side >= hi - lo:
                raise ScaleError(
                    f"loop {i}: side {side:.6g} along x{axis} does not fit in ({lo:.6g}, {hi:.6g})"
                )
            centre = lo + 0.5 * side + ui * (hi - lo - side)
            corner.append(float(centre - 0.5 * side))
        loop = RectLoop((a, b), (corner[0], corner[1]), float(sides[0]), float(sides[1]))
        loops.append(loop)
        curves.append(rectangle_loop(base, loop.plane, loop.corner, loop.width, loop.height))
    return LoopFamily(base, loops, curves)


@dataclass
class HolonomySample:
    """Holonomy matrices at one base point, in fiber components."""

    base: np.ndarray
    metric: np.ndarray
    matrices: list[np.ndarray]
    drifts: list[float]
    kind: str = "levi_civita"
    family: LoopFamily | None = None
    error_estimates: list[float] | None = None

    @property
    def k(self) -> int:
        return self.metric.shape[0]

    @property
    def cholesky(self) -> np.ndarray:
        return np.linalg.cholesky(self.metric)

    @property
    def flagged(self) -> list[int]:
        """Indices of matrices whose metric drift exceeds the flag level."""
        return [i for i, d in enumerate(self.drifts) if d > DRIFT_FLAG]

    def orthogonalized(self) -> list[np.ndarray]:
        low = self.cholesky
        inv_lt = np.linalg.inv(low.T)
        return [low.T @ m @ inv_lt for m in self.matrices]

    def orthogonality_defects(self) -> list[float]:
        g = self.metric
        return [float(np.max(np.abs(m.T @ g @ m - g))) for m in self.matrices]


def sample_holonomy(spec, family: LoopFamily, steps: int = DEFAULT_STEPS, estimate_error: bool = False) -> HolonomySample:
    """Transport the fiber basis around every loop of ``family``."""
    if len(family) == 0:
        raise EmptySampleError("loop family is empty")
    kind = "levi_civita" if isinstance(spec, RiemannianSpec) else "adapted"
    cfield = ChristoffelField(spec, kind)
    metric = cfield.metric(family.base)[0]
    matrices, drifts, errors = [], [], []
    for curve in family.curves:
        res = transport(spec, curve, steps, estimate_error=estimate_error, cfield=cfield)
        matrices.append(res.matrix)
        drifts.append(res.metric_drift)
        errors.append(res.error_estimate)
    return HolonomySample(
        np.asarray(family.base, dtype=float), metric, matrices, drifts, kind, family,
        errors if estimate_error else None,
    )


def from_matrices(matrices, metric=None, base=None) -> HolonomySample:
    """Wrap externally produced matrices (e.g. imported from CSV)."""
    mats = [np.asarray(m, dtype=float) for m in matrices]
    if not mats:
        raise EmptySampleError("no matrices given")
    k = mats[0].shape[0]
    g = np.eye(k) if metric is None else np.asarray(metric, dtype=float)
    defects = [float(np.max(np.abs(m.T @ g @ m - g))) for m in mats]
    return HolonomySample(np.zeros(0) if base is None else np.asarray(base, dtype=float), g, mats, defects, "external")


# ---------------------------------------------------------------------------
# linear algebra on samples


def _rank_threshold(sv: np.ndarray, tol: float) -> float:
    # floor at 1: sampled matrices are orthogonal, so unit scale is natural
    return tol * max(float(sv.max()) if sv.size else 0.0, 1.0)


def span_basis(mats, tol: float = SVD_TOL) -> list[np.ndarray]:
    """Frobenius-orthonormal basis of the span of ``mats``."""
    mats = list(mats)
    if not mats:
        return []
    shape = mats[0].shape
    a = np.stack([m.ravel() for m in mats])
    _, sv, vt = np.linalg.svd(a, full_matrices=False)
    rank = int(np.sum(sv > _rank_threshold(sv, tol)))
    return [vt[i].reshape(shape) for i in range(rank)]


@dataclass
class HolonomyAlgebra:
    basis: list[np.ndarray]
    excluded: list[int]
    rounds: int

    @property
    def dim(self) -> int:
        return len(self.basis)


def holonomy_algebra(sample: HolonomySample, svd_tol: float = SVD_TOL,
                     exclusion: float = LOG_EXCLUSION) -> HolonomyAlgebra:
    """Estimate the holonomy Lie algebra from principal logarithms, closed under brackets."""
    logs, excluded = [], []
    for i, q in enumerate(sample.orthogonalized()):
        if np.any(np.abs(np.linalg.eigvals(q) + 1.0) < exclusion):
            excluded.append(i)
            continue
        lg = np.real(scipy.linalg.logm(q))
        logs.append(0.5 * (lg - lg.T))
    if not logs:
        raise EmptySampleError("every sample lies in the logarithm exclusion zone")
    basis = span_basis(logs, svd_tol)
    rounds = 0
    while rounds < MAX_BRACKET_ROUNDS and len(basis) > 1:
        rounds += 1
        brackets = [x @ y - y @ x for x, y in itertools.combinations(basis, 2)]
        grown = span_basis(basis + brackets, svd_tol)
        if len(grown) == len(basis):
            break
        basis = grown
    return HolonomyAlgebra(basis, excluded, rounds)


def _as_orthogonal(sample_or_mats) -> list[np.ndarray]:
    if isinstance(sample_or_mats, HolonomySample):
        return sample_or_mats.orthogonalized()
    return [np.asarray(m, dtype=float) for m in sample_or_mats]


def commutant(sample, svd_tol: float = SVD_TOL) -> list[np.ndarray]:
    """Basis of all matrices commuting with every (orthogonalised) sample."""
    qs = _as_orthogonal(sample)
    if not qs:
        raise EmptySampleError("commutant of an empty sample")
    k = qs[0].shape[0]
    eye = np.eye(k)
    # row-major vec: vec(XQ) = (I kron Q^T) vec X, vec(QX) = (Q kron I) vec X
    system = np.vstack([np.kron(eye, q.T) - np.kron(q, eye) for q in qs])
    _, sv, vt = np.linalg.svd(system)
    rank = int(np.sum(sv > _rank_threshold(sv, svd_tol)))
    return [vt[i].reshape(k, k) for i in range(rank, k * k)]


@dataclass
class InvariantDecomposition:
    """Orthogonal splitting of the fiber preserved by every sample.

    ``projectors`` live in the orthonormalised frame; ``frame_projectors``
    are the same maps in fiber components (``L^-T P L^T``).
    """

    projectors: list[np.ndarray]
    frame_projectors: list[np.ndarray]
    dims: list[int]
    commutant_dim: int
    symmetric_commutant_dim: int
    eigenvalues: list[float] = field(default_factory=list)

    @property
    def r(self) -> int:
        return len(self.projectors)

    @property
    def trivial_group(self) -> bool:
        k = self.projectors[0].shape[0]
        return self.commutant_dim == k * k

    def summary(self) -> dict:
        return {
            "r": self.r,
            "dims": list(self.dims),
            "commutant_dim": self.commutant_dim,
            "symmetric_commutant_dim": self.symmetric_commutant_dim,
            "trivial_group": self.trivial_group,
        }


def _cluster(eigenvalues: np.ndarray, svd_tol: float) -> list[list[int]]:
    spread = float(eigenvalues[-1] - eigenvalues[0])
    threshold = svd_tol * spread
    clusters = [[0]]
    for i, gap in enumerate(np.diff(eigenvalues)):
        if threshold / 10.0 < gap < 10.0 * threshold:
            raise ClusteringAmbiguityError(
                f"eigenvalue gap {gap:.3g} within a factor 10 of threshold {threshold:.3g}; "
                "change the seed or the tolerance"
            )
        if gap > threshold:
            clusters.append([i + 1])
        else:
            clusters[-1].append(i + 1)
    return clusters


def invariant_decomposition(sample, svd_tol: float = SVD_TOL, seed: int = 0) -> InvariantDecomposition:
    """Split the fiber along the spectrum of a random symmetric commutant element."""
    qs = _as_orthogonal(sample)
    comm = commutant(qs, svd_tol)
    k = qs[0].shape[0]
    sym = span_basis([0.5 * (x + x.T) for x in comm], svd_tol)
    low = sample.cholesky if isinstance(sample, HolonomySample) else np.eye(k)
    inv_lt = np.linalg.inv(low.T)
    if len(sym) <= 1:
        eye = np.eye(k)
        return InvariantDecomposition([eye], [eye.copy()], [k], len(comm), len(sym), [1.0])
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((k, k))
    r_mat = a + a.T
    # orthogonal projection onto the symmetric commutant: independent of its basis
    s = sum(float(np.sum(r_mat * b)) * b for b in sym)
    s = 0.5 * (s + s.T)
    lam, vec = np.linalg.eigh(s)
    clusters = _cluster(lam, svd_tol)
    projectors, frame_projectors, dims, centres = [], [], [], []
    for idx in clusters:
        v = vec[:, idx]
        p = v @ v.T
        projectors.append(p)
        frame_projectors.append(inv_lt @ p @ low.T)
        dims.append(len(idx))
        centres.append(float(np.mean(lam[idx])))
    return InvariantDecomposition(projectors, frame_projectors, dims, len(comm), len(sym), centres)
