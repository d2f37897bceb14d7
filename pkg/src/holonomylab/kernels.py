"""Backend selection for the hot transport loop.

``rk4_propagate(gen, h, x0, record)`` advances ``X' = F(t) X`` by ``N``
classical Runge-Kutta steps of size ``h``.  ``gen`` holds ``F`` sampled at
the ``2N + 1`` half-step nodes ``t0 + j*h/2``; ``record`` is a sorted array
of step indices in ``0..N`` at which ``X`` is copied out.  Returns
``(X_N, recorded)``.

The compiled extension is used when it imports; setting
``HOLONOMYLAB_PURE_PYTHON=1`` forces the pure-Python version.
"""

import os

from . import _rk4_py

python_rk4_propagate = _rk4_py.rk4_propagate

try:
    if os.environ.get("HOLONOMYLAB_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure Python requested")
    from ._rk4 import rk4_propagate as compiled_rk4_propagate
except ImportError:
    compiled_rk4_propagate = None

if compiled_rk4_propagate is not None:
    rk4_propagate = compiled_rk4_propagate
    BACKEND = "cython"
else:
    rk4_propagate = python_rk4_propagate
    BACKEND = "python"
