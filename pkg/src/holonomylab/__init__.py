"""Numerical holonomy of Levi-Civita and adapted connections.

Riemannian metrics and K-contact sub-Riemannian structures are given in a
single coordinate chart as expression strings.  The package transports
frames around loops, samples holonomy groups, finds orthogonal invariant
splittings of the fiber and compares the adapted holonomy of a K-contact
chart with the Levi-Civita holonomy of its Reeb quotient.
"""

from .catalog import CATALOG, CatalogEntry, get as catalog_entry
from .connection import ChristoffelField, adapted_coeffs, frame_derivative, horizontal_coeffs, levi_civita_coeffs
from .expr import differentiate, evaluate, gradient_check, parse, to_source
from .holonomy import (
    HolonomySample,
    InvariantDecomposition,
    LoopFamily,
    commutant,
    generate_loops,
    holonomy_algebra,
    invariant_decomposition,
    sample_holonomy,
)
from .kernels import BACKEND
from .manifold import (
    FrameBasis,
    KContactSpec,
    RiemannianSpec,
    eval_horizontal_metric,
    eval_riemannian_metric,
    quotient_metric,
    validate,
)
from .theorem_lab import de_rham_report, product_holonomy_check, verify_isomorphism
from .transport import (
    Curve,
    Segment,
    TransportResult,
    latitude,
    lift_loop,
    rectangle,
    richardson_check,
    transport_adapted,
    transport_riemannian,
)

__version__ = "0.1.0"
