"""Built-in example manifolds.

The contact entries are contactizations written directly in one adapted
chart: ``sasakian_sphere`` is the Hopf chart over the round 2-sphere and
``product_contactization`` the analogous circle bundle over S^2 x S^2
(the round metric standing in for Fubini-Study up to scale).  Longitude
coordinates are unwrapped onto a real interval wide enough to hold a full
latitude circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .manifold import KContactSpec, RiemannianSpec

POLAR = (0.2, math.pi - 0.2)
LONGITUDE = (-7.0, 7.0)
VERTICAL = (-10.0, 10.0)
FLAT = (-5.0, 5.0)


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    spec: RiemannianSpec | KContactSpec
    base: tuple[float, ...]
    scale: float
    reach: float
    expected_r: int
    expected_dims: tuple[int, ...]
    note: str = ""

    @property
    def base_point(self) -> np.ndarray:
        return np.array(self.base, dtype=float)


def _entries() -> dict[str, CatalogEntry]:
    half = math.pi / 2
    sphere = [["1", "0"], ["0", "sin(x1)^2"]]
    product = [
        ["1", "0", "0", "0"],
        ["0", "sin(x1)^2", "0", "0"],
        ["0", "0", "1", "0"],
        ["0", "0", "0", "sin(x3)^2"],
    ]
    flat2 = [["1", "0"], ["0", "1"]]
    flat4 = [[("1" if i == j else "0") for j in range(4)] for i in range(4)]
    items = [
        CatalogEntry(
            "euclidean_plane",
            RiemannianSpec.from_strings(flat2, [FLAT, FLAT], "euclidean_plane"),
            (0.0, 0.0), 0.5, 1.0, 2, (1, 1),
            "trivial holonomy; any splitting is invariant",
        ),
        CatalogEntry(
            "round_sphere",
            RiemannianSpec.from_strings(sphere, [POLAR, LONGITUDE], "round_sphere"),
            (half, 0.0), 0.5, 1.0, 1, (2,),
        ),
        CatalogEntry(
            "sphere_product",
            RiemannianSpec.from_strings(product, [POLAR, LONGITUDE, POLAR, LONGITUDE], "sphere_product",
                                        blocks=[[1, 2], [3, 4]]),
            (half, 0.0, half, 0.0), 0.5, 1.0, 2, (2, 2),
        ),
        CatalogEntry(
            "euclidean_4",
            RiemannianSpec.from_strings(flat4, [FLAT] * 4, "euclidean_4", blocks=[[1, 2], [3, 4]]),
            (0.0, 0.0, 0.0, 0.0), 0.5, 1.0, 4, (1, 1, 1, 1),
            "trivial holonomy; any splitting is invariant",
        ),
        CatalogEntry(
            "heisenberg",
            KContactSpec.from_strings(1, flat2, ["-x2", "0"], [FLAT, FLAT, FLAT], "heisenberg"),
            (0.0, 0.0, 0.0), 0.5, 1.0, 2, (1, 1),
            "trivial holonomy; any splitting is invariant",
        ),
        CatalogEntry(
            "torus_contactization",
            KContactSpec.from_strings(1, flat2, ["0", "-x1"], [FLAT, FLAT, FLAT], "torus_contactization"),
            (0.0, 0.0, 0.0), 0.5, 1.0, 2, (1, 1),
            "trivial holonomy; any splitting is invariant",
        ),
        CatalogEntry(
            "sasakian_sphere",
            KContactSpec.from_strings(1, sphere, ["0", "-cos(x1)"], [POLAR, LONGITUDE, VERTICAL], "sasakian_sphere"),
            (half, 0.0, 0.0), 0.5, 1.0, 1, (2,),
        ),
        CatalogEntry(
            "product_contactization",
            KContactSpec.from_strings(
                2, product, ["0", "-cos(x1)", "0", "-cos(x3)"],
                [POLAR, LONGITUDE, POLAR, LONGITUDE, VERTICAL], "product_contactization",
            ),
            (half, 0.0, half, 0.0, 0.0), 0.5, 1.0, 2, (2, 2),
        ),
    ]
    return {e.name: e for e in items}


CATALOG = _entries()


def get(name: str) -> CatalogEntry:
    try:
        return CATALOG[name]
    except KeyError:
        raise ConfigError(f"unknown catalog entry {name!r}; known: {', '.join(sorted(CATALOG))}") from None


def kcontact_entries() -> list[CatalogEntry]:
    return [e for e in CATALOG.values() if isinstance(e.spec, KContactSpec)]
