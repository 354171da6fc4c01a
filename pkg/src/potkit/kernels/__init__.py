"""Hot summation kernels with a compiled core and a NumPy fallback.

The compiled extension (``potkit.kernels._cy``) is selected automatically at
import when present.  Selection can be pinned with the environment variable
``POTKIT_KERNELS`` set to ``cython`` or ``numpy``, or at runtime with
:func:`use_backend` (the CLI flag ``--sequential`` maps to the NumPy
backend).  Both backends carry the same contract: results agree with the
sequential reference sum to within 1e-12 relative.
"""

from __future__ import annotations

import os

import numpy as np

from ..errors import ZeroDistance
from . import numpy_backend

try:
    from . import _cy
except ImportError:
    _cy = None

_BACKENDS = {"numpy": numpy_backend}
if _cy is not None:
    _BACKENDS["cython"] = _cy

_active = None


def available_backends():
    return sorted(_BACKENDS)


def use_backend(name: str):
    """Select the kernel backend: 'auto', 'cython', or 'numpy'."""
    global _active
    if name == "auto":
        _active = _BACKENDS.get("cython", numpy_backend)
        return
    try:
        _active = _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown kernel backend {name!r}; available: {available_backends()}"
        ) from None


def backend_name() -> str:
    for name, mod in _BACKENDS.items():
        if mod is _active:
            return name
    return "unknown"


use_backend(os.environ.get("POTKIT_KERNELS", "auto"))


def point_source_sum(sources, weights, targets, near_radius=None, near_value=None):
    """Newton-kernel sum  out[t] = sum_j w[j] / |targets[t] - sources[j]|.

    With ``near_radius``/``near_value`` given (both per-source arrays), pairs
    closer than near_radius[j] use the regularized kernel value near_value[j].
    Without them, a coincident pair raises ZeroDistance.
    """
    sources = np.ascontiguousarray(sources, dtype=np.float64).reshape(-1, 3)
    targets = np.ascontiguousarray(targets, dtype=np.float64).reshape(-1, 3)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    use_near = near_radius is not None
    if use_near:
        near_radius = np.ascontiguousarray(near_radius, dtype=np.float64)
        near_value = np.ascontiguousarray(near_value, dtype=np.float64)
    else:
        near_radius = np.zeros(0)
        near_value = np.zeros(0)
    out, had_zero = _active.point_source_sum(
        sources, weights, targets, near_radius, near_value, use_near
    )
    if had_zero:
        raise ZeroDistance("evaluation point coincides with a point source")
    return out


def pairwise_energy(positions, masses):
    """(sum_{i<j} m_i m_j / r_ij, min pairwise distance); raises on coincidence."""
    positions = np.ascontiguousarray(positions, dtype=np.float64).reshape(-1, 3)
    masses = np.ascontiguousarray(masses, dtype=np.float64)
    energy, dmin = _active.pairwise_energy(positions, masses)
    if dmin == 0.0:
        raise ZeroDistance("two charges occupy the same position")
    return energy, dmin


def pairwise_gradient(positions, masses):
    """(gradient of pairwise_energy w.r.t. positions, min pairwise distance)."""
    positions = np.ascontiguousarray(positions, dtype=np.float64).reshape(-1, 3)
    masses = np.ascontiguousarray(masses, dtype=np.float64)
    grad, dmin = _active.pairwise_gradient(positions, masses)
    if dmin == 0.0:
        raise ZeroDistance("two charges occupy the same position")
    return grad, dmin


def min_pair_distance(positions):
    positions = np.ascontiguousarray(positions, dtype=np.float64).reshape(-1, 3)
    return numpy_backend.min_pair_distance(positions)
