"""End-to-end checks relating adapted holonomy upstairs to Levi-Civita holonomy on the quotient.

In adapted coordinates the projection drops ``xn`` and its differential
sends ``e_i`` to ``d/dx^i``, so it is the identity matrix on fiber
components and transports upstairs and downstairs compare entry by entry.
Downstairs loop families are generated first and then lifted; every
quotient loop therefore has a lift by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .catalog import CatalogEntry
from .connection import ChristoffelField
from .errors import InputError, MatchingTieError
from .holonomy import (
    SVD_TOL,
    HolonomySample,
    InvariantDecomposition,
    LoopFamily,
    generate_loops,
    invariant_decomposition,
    sample_holonomy,
)
from .manifold import KContactSpec, RiemannianSpec, project, quotient_metric, validate_partition
from .transport import DEFAULT_STEPS, lift_loop, transport

ISO_TOL = 1e-6
DERHAM_TOL = 1e-5
PRODUCT_TOL = 1e-6
RICHARDSON_FACTOR = 10.0


def _require_kcontact(entry: CatalogEntry) -> KContactSpec:
    if not isinstance(entry.spec, KContactSpec):
        raise InputError(f"{entry.name} is not a K-contact entry")
    return entry.spec


def lifted_family(spec: KContactSpec, family: LoopFamily, vertical_value: float) -> LoopFamily:
    base = np.append(family.base, vertical_value)
    return LoopFamily(base, list(family.loops), [lift_loop(spec, c, vertical_value) for c in family.curves])


@dataclass
class DiagramReport:
    entry: str
    residuals: list[float]
    adapted_estimates: list[float]
    quotient_estimates: list[float]
    tol: float
    settings: dict = field(default_factory=dict)
    adapted_matrices: list[np.ndarray] = field(default_factory=list, repr=False)
    quotient_matrices: list[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)

    @property
    def richardson_bounded(self) -> list[bool]:
        return [
            r <= RICHARDSON_FACTOR * max(a, q)
            for r, a, q in zip(self.residuals, self.adapted_estimates, self.quotient_estimates)
        ]

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tol and all(self.richardson_bounded)

    def as_dict(self) -> dict:
        return {
            "entry": self.entry,
            "settings": self.settings,
            "tol": self.tol,
            "max_residual": self.max_residual,
            "verdict": "PASS" if self.passed else "FAIL",
            "loops": [
                {"index": i, "residual": r, "adapted_richardson": a, "quotient_richardson": q, "bounded": b}
                for i, (r, a, q, b) in enumerate(
                    zip(self.residuals, self.adapted_estimates, self.quotient_estimates, self.richardson_bounded)
                )
            ],
        }


def verify_isomorphism(entry: CatalogEntry, loop_count: int = 20, steps: int = DEFAULT_STEPS, seed: int = 0,
                       tol: float = ISO_TOL, vertical_value: float | None = None) -> DiagramReport:
    """Compare adapted transport along lifted loops with Levi-Civita transport on the quotient."""
    spec = _require_kcontact(entry)
    quotient = quotient_metric(spec)
    base = entry.base_point
    if vertical_value is None:
        vertical_value = float(base[-1])
    down = generate_loops(quotient, project(spec, base), loop_count, entry.scale, seed, entry.reach)
    f_up = ChristoffelField(spec, "adapted")
    f_down = ChristoffelField(quotient, "levi_civita")
    report = DiagramReport(
        entry.name, [], [], [], tol,
        {"loop_count": loop_count, "steps": steps, "seed": seed, "tol": tol,
         "vertical_value": vertical_value, "scale": entry.scale, "reach": entry.reach},
    )
    for curve in down.curves:
        up = transport(spec, lift_loop(spec, curve, vertical_value), steps, estimate_error=True, cfield=f_up)
        dn = transport(quotient, curve, steps, estimate_error=True, cfield=f_down)
        report.residuals.append(float(np.max(np.abs(up.matrix - dn.matrix))))
        report.adapted_estimates.append(up.error_estimate)
        report.quotient_estimates.append(dn.error_estimate)
        report.adapted_matrices.append(up.matrix)
        report.quotient_matrices.append(dn.matrix)
    return report


def match_projectors(up: list[np.ndarray], down: list[np.ndarray], tie_tol: float = 1e-12):
    """Greedy minimal-Frobenius pairing; conflicting ties raise."""
    dist = np.array([[np.linalg.norm(p - q) for q in down] for p in up])
    pairs = []
    free_rows, free_cols = set(range(len(up))), set(range(len(down)))
    while free_rows and free_cols:
        cands = sorted((dist[i, j], i, j) for i in free_rows for j in free_cols)
        best, i, j = cands[0]
        for d, i2, j2 in cands[1:]:
            if d - best > tie_tol:
                break
            if i2 == i or j2 == j:
                raise MatchingTieError(f"projector matching tie at distance {best:.3g}")
        pairs.append((i, j, float(best)))
        free_rows.discard(i)
        free_cols.discard(j)
    return pairs


@dataclass
class DeRhamReport:
    entry: str
    upstairs: InvariantDecomposition
    downstairs: InvariantDecomposition
    matches: list[tuple[int, int, float]]
    tol: float
    settings: dict = field(default_factory=dict)
    upstairs_sample: HolonomySample | None = field(default=None, repr=False)
    downstairs_sample: HolonomySample | None = field(default=None, repr=False)

    @property
    def max_match_residual(self) -> float:
        return max((d for _, _, d in self.matches), default=0.0)

    @property
    def notes(self) -> list[str]:
        out = []
        if self.upstairs.trivial_group or self.downstairs.trivial_group:
            out.append("trivial group: decomposition non-unique")
        if self.upstairs.r == 1:
            out.append("no splitting found at these samples")
        return out

    @property
    def passed(self) -> bool:
        return (
            self.upstairs.r == self.downstairs.r
            and sorted(self.upstairs.dims) == sorted(self.downstairs.dims)
            and len(self.matches) == self.upstairs.r
            and all(self.upstairs.dims[i] == self.downstairs.dims[j] for i, j, _ in self.matches)
            and self.max_match_residual < self.tol
        )

    def as_dict(self) -> dict:
        return {
            "entry": self.entry,
            "settings": self.settings,
            "tol": self.tol,
            "upstairs": self.upstairs.summary(),
            "downstairs": self.downstairs.summary(),
            "matches": [{"upstairs": i, "downstairs": j, "residual": d} for i, j, d in self.matches],
            "max_match_residual": self.max_match_residual,
            "notes": self.notes,
            "verdict": "PASS" if self.passed else "FAIL",
        }


def de_rham_report(entry: CatalogEntry, loop_count: int = 20, steps: int = DEFAULT_STEPS, seed: int = 0,
                   tol: float = DERHAM_TOL, svd_tol: float = SVD_TOL) -> DeRhamReport:
    """Decompose the fiber upstairs (adapted) and downstairs (quotient) with matched loops."""
    spec = _require_kcontact(entry)
    quotient = quotient_metric(spec)
    base = entry.base_point
    down = generate_loops(quotient, project(spec, base), loop_count, entry.scale, seed, entry.reach)
    up = lifted_family(spec, down, float(base[-1]))
    s_up = sample_holonomy(spec, up, steps)
    s_down = sample_holonomy(quotient, down, steps)
    d_up = invariant_decomposition(s_up, svd_tol, seed)
    d_down = invariant_decomposition(s_down, svd_tol, seed)
    matches = match_projectors(d_up.projectors, d_down.projectors)
    return DeRhamReport(
        entry.name, d_up, d_down, matches, tol,
        {"loop_count": loop_count, "steps": steps, "seed": seed, "tol": tol, "svd_tol": svd_tol,
         "scale": entry.scale, "reach": entry.reach},
        s_up, s_down,
    )


@dataclass
class ProductReport:
    entry: str
    blocks: tuple[tuple[int, ...], ...]
    off_block: list[float]
    tol: float
    settings: dict = field(default_factory=dict)

    @property
    def max_off_block(self) -> float:
        return max(self.off_block, default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_off_block < self.tol

    def as_dict(self) -> dict:
        return {
            "entry": self.entry,
            "settings": self.settings,
            "blocks": [list(b) for b in self.blocks],
            "tol": self.tol,
            "max_off_block": self.max_off_block,
            "off_block": self.off_block,
            "verdict": "PASS" if self.passed else "FAIL",
        }


def off_block_magnitude(matrix: np.ndarray, blocks) -> float:
    owner = np.empty(matrix.shape[0], dtype=int)
    for bi, b in enumerate(blocks):
        owner[np.asarray(b) - 1] = bi
    mask = owner[:, None] != owner[None, :]
    return float(np.max(np.abs(matrix[mask]), initial=0.0))


def product_holonomy_check(spec: RiemannianSpec, loop_count: int = 40, steps: int = DEFAULT_STEPS, seed: int = 0,
                           base=None, scale: float = 0.5, reach: float | None = 1.0,
                           tol: float = PRODUCT_TOL) -> ProductReport:
    """Largest off-block entry over sampled Levi-Civita holonomy of a declared product metric."""
    if not isinstance(spec, RiemannianSpec):
        raise InputError("product check needs a Riemannian spec")
    blocks = validate_partition(spec)
    if base is None:
        base = [0.5 * (lo + hi) for lo, hi in spec.domain_box]
    family = generate_loops(spec, base, loop_count, scale, seed, reach)
    off = []
    if loop_count:
        sample = sample_holonomy(spec, family, steps)
        off = [off_block_magnitude(m, blocks) for m in sample.matrices]
    return ProductReport(
        spec.name, blocks, off, tol,
        {"loop_count": loop_count, "steps": steps, "seed": seed, "scale": scale, "reach": reach, "tol": tol},
    )
