"""Batch command-line front end.

Exit codes: 0 success or PASS, 1 verdict FAIL, 2 input error, 3 numerical
error.  Every run writes ``report.txt``, a machine-readable
``report.json`` sidecar and command-specific CSV tables to ``--out``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import catalog
from .catalog import CatalogEntry
from .connection import ChristoffelField
from .errors import ConfigError, HolonomyLabError, InputError, NumericalError
from .holonomy import (
    SVD_TOL,
    from_matrices,
    generate_loops,
    holonomy_algebra,
    invariant_decomposition,
    sample_holonomy,
)
from .manifold import KContactSpec, RiemannianSpec, validate
from .theorem_lab import (
    DERHAM_TOL,
    ISO_TOL,
    PRODUCT_TOL,
    de_rham_report,
    product_holonomy_check,
    verify_isomorphism,
)
from .transport import Curve, transport

COMMANDS = ("validate", "coeffs", "transport", "holonomy", "decompose",
            "verify-isomorphism", "derham", "product-check")
SAMPLING = {"holonomy", "decompose", "verify-isomorphism", "derham", "product-check"}
DEFAULT_TOL = {"verify-isomorphism": ISO_TOL, "derham": DERHAM_TOL, "product-check": PRODUCT_TOL}
DEFAULT_LOOPS = {"product-check": 40}

CONFIG_FIELDS = {
    "kind", "name", "dim", "m", "metric", "contact_coeffs", "domain_box", "blocks",
    "catalog", "thresholds", "base_point", "curve", "scale", "reach",
}
THRESHOLD_FIELDS = {"pd", "residual", "contact"}


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    command: str
    catalog: str | None = None
    config: str | None = None
    steps: int = 512
    loops: int = 20
    scale: float | None = None
    seed: int | None = None
    tol: float | None = None
    svd_tol: float = SVD_TOL
    out: str = "holonomylab-out"
    samples: int = 200
    grid: int = 3
    curve: str | None = None
    import_samples: str | None = None
    fiber_metric: str | None = None
    vertical: float | None = None

    def check(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        imported = self.command == "decompose" and self.import_samples is not None
        if not imported and (self.catalog is None) == (self.config is None):
            raise ConfigError("give exactly one of --catalog or --config")
        if self.command in SAMPLING and not imported and self.seed is None:
            raise ConfigError(f"{self.command} samples loops and needs an explicit --seed")
        for name in ("steps", "loops", "samples", "grid", "svd_tol"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"--{name.replace('_', '-')} must be positive")
        for name in ("scale", "tol"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigError(f"--{name} must be positive")
        if self.seed is not None and self.seed < 0:
            raise ConfigError("--seed must be non-negative")


@dataclass
class Loaded:
    entry: CatalogEntry
    thresholds: dict
    curve: Curve | None


def load_config(path) -> Loaded:
    """Read a JSON manifold config; unknown fields are rejected."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from None
    return config_from_dict(data)


def config_from_dict(data: dict) -> Loaded:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - CONFIG_FIELDS
    if unknown:
        raise ConfigError(f"unknown config fields: {', '.join(sorted(unknown))}")
    thresholds = dict(data.get("thresholds", {}))
    bad = set(thresholds) - THRESHOLD_FIELDS
    if bad:
        raise ConfigError(f"unknown threshold fields: {', '.join(sorted(bad))}")
    if "catalog" in data:
        base_entry = catalog.get(data["catalog"])
        spec = base_entry.spec
        defaults = (base_entry.base, base_entry.scale, base_entry.reach, base_entry.expected_r, base_entry.expected_dims)
    else:
        spec = _spec_from_dict(data)
        centre = tuple(0.5 * (lo + hi) for lo, hi in spec.domain_box)
        defaults = (centre, 0.5, None, 0, ())
    base = tuple(float(v) for v in data.get("base_point", defaults[0]))
    if len(base) != spec.chart_dim:
        raise ConfigError(f"base_point needs {spec.chart_dim} coordinates")
    entry = CatalogEntry(
        spec.name, spec, base, float(data.get("scale", defaults[1])),
        data.get("reach", defaults[2]), defaults[3], defaults[4],
    )
    curve = Curve.from_config(data["curve"]) if "curve" in data else None
    return Loaded(entry, thresholds, curve)


def _spec_from_dict(data: dict):
    for key in ("kind", "metric", "domain_box"):
        if key not in data:
            raise ConfigError(f"config lacks required field {key!r}")
    kind = data["kind"]
    name = data.get("name", kind)
    if kind == "riemannian":
        if "contact_coeffs" in data or "m" in data:
            raise ConfigError("riemannian configs take dim, not m or contact_coeffs")
        spec = RiemannianSpec.from_strings(data["metric"], data["domain_box"], name, data.get("blocks"))
        if "dim" in data and int(data["dim"]) != spec.dim:
            raise ConfigError(f"dim {data['dim']} does not match domain_box of length {spec.dim}")
        return spec
    if kind == "kcontact":
        if "m" not in data or "contact_coeffs" not in data:
            raise ConfigError("kcontact configs need m and contact_coeffs")
        if "blocks" in data:
            raise ConfigError("blocks apply to riemannian configs only")
        return KContactSpec.from_strings(int(data["m"]), data["metric"], data["contact_coeffs"],
                                         data["domain_box"], name)
    raise ConfigError(f"kind must be 'riemannian' or 'kcontact', got {kind!r}")


# ---------------------------------------------------------------------------
# output


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if value is None:
        return ""
    return str(value)


def emit_csv(path, header, rows) -> None:
    """Write a CSV table; floats use 17 significant digits so they round-trip."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _text(title: str, body: dict) -> str:
    lines = [title, "=" * len(title)]

    def walk(obj, indent):
        pad = "  " * indent
        if isinstance(obj, dict):
            for k, v in obj.items():
                if isinstance(v, (dict, list)) and v and not _flat_list(v):
                    lines.append(f"{pad}{k}:")
                    walk(v, indent + 1)
                else:
                    lines.append(f"{pad}{k}: {_show(v)}")
        elif isinstance(obj, list):
            for i, v in enumerate(obj):
                if isinstance(v, dict):
                    lines.append(f"{pad}- [{i}]")
                    walk(v, indent + 1)
                else:
                    lines.append(f"{pad}- {_show(v)}")

    walk(body, 0)
    return "\n".join(lines) + "\n"


def _flat_list(v) -> bool:
    return isinstance(v, list) and all(not isinstance(x, (dict, list)) for x in v)


def _show(v) -> str:
    if isinstance(v, float):
        return format(v, ".6g")
    if isinstance(v, list):
        return "[" + ", ".join(_show(x) for x in v) + "]"
    return str(v)


def _write_report(out: Path, command: str, cfg: RunConfig, body: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    doc = _jsonable({"command": command, "config": asdict(cfg), **body})
    (out / "report.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    (out / "report.txt").write_text(_text(f"holonomylab {command}", doc))


def _matrix_cols(k: int) -> list[str]:
    return [f"m_{i + 1}_{j + 1}" for i in range(k) for j in range(k)]


# ---------------------------------------------------------------------------
# commands


def _load(cfg: RunConfig) -> Loaded:
    if cfg.catalog is not None:
        return Loaded(catalog.get(cfg.catalog), {}, None)
    return load_config(cfg.config)


def _scaled(entry: CatalogEntry, cfg: RunConfig) -> CatalogEntry:
    if cfg.scale is None:
        return entry
    return CatalogEntry(entry.name, entry.spec, entry.base, cfg.scale, entry.reach,
                        entry.expected_r, entry.expected_dims, entry.note)


def cmd_validate(cfg: RunConfig, loaded: Loaded, out: Path) -> int:
    spec = loaded.entry.spec
    th = loaded.thresholds
    kwargs = {}
    if "pd" in th:
        kwargs["pd_threshold"] = float(th["pd"])
    if "residual" in th:
        kwargs["residual_tol"] = float(th["residual"])
    if "contact" in th:
        kwargs["contact_threshold"] = float(th["contact"])
    report = validate(spec, cfg.samples, cfg.seed if cfg.seed is not None else 0, **kwargs)
    n = spec.chart_dim
    emit_csv(
        out / "validation.csv",
        ["condition", "passed", "residual", "threshold"] + [f"witness_x{i + 1}" for i in range(n)],
        [[c.name, c.passed, c.residual, c.threshold] + list(c.witness or [None] * n) for c in report.conditions],
    )
    body = {
        "spec": spec.name,
        "kind": spec.kind,
        "conditions": [c.as_dict() for c in report.conditions],
        "failed": report.failed(),
        "verdict": "PASS" if report.passed else "FAIL",
    }
    _write_report(out, cfg.command, cfg, body)
    return 0 if report.passed else 1


def cmd_coeffs(cfg: RunConfig, loaded: Loaded, out: Path) -> int:
    spec = loaded.entry.spec
    axes = [lo + (hi - lo) * (np.arange(cfg.grid) + 1.0) / (cfg.grid + 1.0) for lo, hi in spec.domain_box]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, spec.chart_dim)
    cfield = ChristoffelField(spec)
    gamma = cfield.coeffs(pts)
    rows = []
    for p, arr in zip(pts, gamma):
        for idx in np.ndindex(arr.shape):
            rows.append([idx[0] + 1, idx[1] + 1, idx[2] + 1, arr[idx]] + list(p))
    emit_csv(out / "coeffs.csv", ["k", "i", "j", "value"] + [f"x{i + 1}" for i in range(spec.chart_dim)], rows)
    body = {"spec": spec.name, "connection": cfield.kind, "points": int(pts.shape[0]), "rows": len(rows)}
    _write_report(out, cfg.command, cfg, body)
    return 0


def cmd_transport(cfg: RunConfig, loaded: Loaded, out: Path) -> int:
    spec = loaded.entry.spec
    if cfg.curve is not None:
        text = cfg.curve
        curve = Curve.from_config(json.loads(Path(text).read_text())) if Path(text).is_file() else Curve.from_config(text)
    else:
        curve = loaded.curve
    if curve is None:
        raise ConfigError("transport needs a curve (--curve or a 'curve' config field)")
    if isinstance(spec, KContactSpec) and curve.dim == spec.fiber_dim:
        from .transport import lift_loop

        vertical = cfg.vertical if cfg.vertical is not None else loaded.entry.base[-1]
        curve = lift_loop(spec, curve, vertical)
    res = transport(spec, curve, cfg.steps, estimate_error=True)
    k = res.matrix.shape[0]
    emit_csv(out / "transport.csv", ["i", "j", "value"],
             [[i + 1, j + 1, res.matrix[i, j]] for i in range(k) for j in range(k)])
    body = {
        "spec": spec.name,
        "connection": res.kind,
        "curve": curve.to_config(),
        "closed": curve.is_closed(),
        "matrix": res.matrix,
        "metric_drift": res.metric_drift,
        "richardson_estimate": res.error_estimate,
        "steps_used": res.steps_used,
        "orthogonality_defect": res.orthogonality_defect() if curve.is_closed() else None,
    }
    _write_report(out, cfg.command, cfg, body)
    return 0


def _sample(cfg: RunConfig, entry: CatalogEntry):
    spec = entry.spec
    family = generate_loops(spec, entry.base_point, cfg.loops, entry.scale, cfg.seed, entry.reach)
    return sample_holonomy(spec, family, cfg.steps), family


def _sample_tables(out: Path, sample, family) -> None:
    k = sample.k
    rows = []
    for i, m in enumerate(sample.matrices):
        loop = family.loops[i] if family is not None and i < len(family.loops) else None
        params = [None] * 6 if loop is None else [loop.plane[0], loop.plane[1], loop.corner[0], loop.corner[1],
                                                   loop.width, loop.height]
        rows.append([i] + params + [sample.drifts[i]] + list(m.ravel()))
    emit_csv(out / "samples.csv",
             ["loop", "plane_a", "plane_b", "corner_a", "corner_b", "width", "height", "drift"] + _matrix_cols(k),
             rows)
    emit_csv(out / "fiber_metric.csv", ["i", "j", "value"],
             [[i + 1, j + 1, sample.metric[i, j]] for i in range(k) for j in range(k)])


def cmd_holonomy(cfg: RunConfig, loaded: Loaded, out: Path) -> int:
    entry = _scaled(loaded.entry, cfg)
    sample, family = _sample(cfg, entry)
    _sample_tables(out, sample, family)
    algebra = holonomy_algebra(sample, cfg.svd_tol)
    body = {
        "spec": entry.name,
        "connection": sample.kind,
        "base": entry.base,
        "scale": entry.scale,
        "reach": entry.reach,
        "loops": len(sample.matrices),
        "max_drift": max(sample.drifts),
        "flagged": sample.flagged,
        "max_orthogonality_defect": max(sample.orthogonality_defects()),
        "algebra_dim": algebra.dim,
        "algebra_excluded": algebra.excluded,
        "algebra_basis": [b for b in algebra.basis],
    }
    _write_report(out, cfg.command, cfg, body)
    return 0


def read_samples_csv(path) -> list[np.ndarray]:
    """Matrices from a samples CSV (columns ``m_i_j``; other columns ignored)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = [c for c in (reader.fieldnames or []) if c.startswith("m_")]
        k = math.isqrt(len(cols))
        if k == 0 or k * k != len(cols):
            raise ConfigError(f"{path}: expected k*k columns named m_i_j, found {len(cols)}")
        order = _matrix_cols(k)
        if set(order) != set(cols):
            raise ConfigError(f"{path}: matrix columns must be m_1_1 .. m_{k}_{k}")
        mats = [np.array([float(row[c]) for c in order]).reshape(k, k) for row in reader]
    return mats


def read_matrix_csv(path, k: int) -> np.ndarray:
    g = np.full((k, k), np.nan)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            g[int(row["i"]) - 1, int(row["j"]) - 1] = float(row["value"])
    if np.isnan(g).any():
        raise ConfigError(f"{path}: incomplete {k}x{k} matrix")
    return g


def cmd_decompose(cfg: RunConfig, loaded: Loaded | None, out: Path) -> int:
    if cfg.import_samples is not None:
        mats = read_samples_csv(cfg.import_samples)
        metric = read_matrix_csv(cfg.fiber_metric, mats[0].shape[0]) if cfg.fiber_metric else None
        sample = from_matrices(mats, metric)
        name = str(cfg.import_samples)
    else:
        entry = _scaled(loaded.entry, cfg)
        sample, family = _sample(cfg, entry)
        _sample_tables(out, sample, family)
        name = entry.name
    seed = cfg.seed if cfg.seed is not None else 0
    dec = invariant_decomposition(sample, cfg.svd_tol, seed)
    k = sample.k
    emit_csv(
        out / "projectors.csv",
        ["projector", "dim", "i", "j", "value", "frame_value"],
        [[s, dec.dims[s], i + 1, j + 1, p[i, j], fp[i, j]]
         for s, (p, fp) in enumerate(zip(dec.projectors, dec.frame_projectors))
         for i in range(k) for j in range(k)],
    )
    body = {"source": name, **dec.summary(), "eigenvalue_clusters": dec.eigenvalues,
            "notes": ["trivial group: decomposition non-unique"] if dec.trivial_group else []}
    _write_report(out, cfg.command, cfg, body)
    return 0


def cmd_verify(cfg: RunConfig, loaded: Loaded, out: Path) -> int:
    entry = _scaled(loaded.entry, cfg)
    report = verify_isomorphism(entry, cfg.loops, cfg.steps, cfg.seed, cfg.tol, cfg.vertical)
    emit_csv(out / "residuals.csv", ["loop", "residual", "adapted_richardson", "quotient_richardson", "bounded"],
             [[i, r, a, q, b] for i, (r, a, q, b) in enumerate(zip(
                 report.residuals, report.adapted_estimates, report.quotient_estimates, report.richardson_bounded))])
    _write_report(out, cfg.command, cfg, report.as_dict())
    return 0 if report.passed else 1


def cmd_derham(cfg: RunConfig, loaded: Loaded, out: Path) -> int:
    entry = _scaled(loaded.entry, cfg)
    report = de_rham_report(entry, cfg.loops, cfg.steps, cfg.seed, cfg.tol, cfg.svd_tol)
    for side, dec in (("upstairs", report.upstairs), ("downstairs", report.downstairs)):
        k = dec.projectors[0].shape[0]
        emit_csv(out / f"projectors_{side}.csv", ["projector", "dim", "i", "j", "value"],
                 [[s, dec.dims[s], i + 1, j + 1, p[i, j]]
                  for s, p in enumerate(dec.projectors) for i in range(k) for j in range(k)])
    emit_csv(out / "matches.csv", ["upstairs", "downstairs", "residual"], report.matches)
    _write_report(out, cfg.command, cfg, report.as_dict())
    return 0 if report.passed else 1


def cmd_product(cfg: RunConfig, loaded: Loaded, out: Path) -> int:
    entry = _scaled(loaded.entry, cfg)
    report = product_holonomy_check(entry.spec, cfg.loops, cfg.steps, cfg.seed, entry.base_point,
                                    entry.scale, entry.reach, cfg.tol)
    emit_csv(out / "off_block.csv", ["loop", "off_block"], list(enumerate(report.off_block)))
    _write_report(out, cfg.command, cfg, report.as_dict())
    return 0 if report.passed else 1


HANDLERS = {
    "validate": cmd_validate,
    "coeffs": cmd_coeffs,
    "transport": cmd_transport,
    "holonomy": cmd_holonomy,
    "decompose": cmd_decompose,
    "verify-isomorphism": cmd_verify,
    "derham": cmd_derham,
    "product-check": cmd_product,
}


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    try:
        cfg.check()
        if cfg.tol is None:
            cfg.tol = DEFAULT_TOL.get(cfg.command)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        loaded = None
        if not (cfg.command == "decompose" and cfg.import_samples is not None):
            loaded = _load(cfg)
        return HANDLERS[cfg.command](cfg, loaded, out)
    except InputError as err:
        print(f"holonomylab {cfg.command}: input error: {err}", file=sys.stderr)
        return 2
    except NumericalError as err:
        print(f"holonomylab {cfg.command}: numerical error: {err}", file=sys.stderr)
        return 3
    except HolonomyLabError as err:
        print(f"holonomylab {cfg.command}: {err}", file=sys.stderr)
        return 3
    except (ValueError, TypeError, KeyError, OSError) as err:
        print(f"holonomylab {cfg.command}: input error: {err}", file=sys.stderr)
        return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="holonomylab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        src = p.add_mutually_exclusive_group()
        src.add_argument("--catalog", metavar="NAME")
        src.add_argument("--config", metavar="PATH")
        p.add_argument("--steps", type=int, default=512, help="RK4 steps per unit parameter length")
        p.add_argument("--loops", type=int, default=DEFAULT_LOOPS.get(name, 20))
        p.add_argument("--scale", type=float, help="largest rectangle side")
        p.add_argument("--seed", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--svd-tol", type=float, default=SVD_TOL)
        p.add_argument("--out", default="holonomylab-out")
        if name == "validate":
            p.add_argument("--samples", type=int, default=200)
        if name == "coeffs":
            p.add_argument("--grid", type=int, default=3, help="grid points per coordinate")
        if name == "transport":
            p.add_argument("--curve", help="generator such as 'latitude(pi/3)' or a JSON segment file")
        if name in ("transport", "verify-isomorphism"):
            p.add_argument("--vertical", type=float, help="vertical coordinate of lifted loops")
        if name == "decompose":
            p.add_argument("--samples-csv", dest="import_samples", metavar="PATH",
                           help="decompose matrices from a samples CSV instead of sampling")
            p.add_argument("--fiber-metric", metavar="PATH", help="CSV i,j,value of the fiber metric")
    return parser


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    return run(RunConfig(**args))


if __name__ == "__main__":
    sys.exit(main())
