"""Reference NumPy implementations of the hot summation kernels.

These are the fallback used when the compiled extension is unavailable, and
the ground truth the compiled kernels are tested against.  All sums are
evaluated in a fixed chunked order, so results are deterministic on a given
machine.
"""

from __future__ import annotations

import numpy as np

# Cap on the number of matrix elements held per chunk (~150 MB of float64
# scratch across the two live buffers).
_CHUNK_ELEMS = 10_000_000


def _target_chunk(n_sources: int) -> int:
    return max(16, min(65536, _CHUNK_ELEMS // max(n_sources, 1)))


def point_source_sum(sources, weights, targets, near_radius, near_value, use_near):
    """Sum of weights[j] * K(target, source[j]) over all sources.

    K is the Newton kernel 1/r.  When ``use_near`` is set, any pair closer
    than ``near_radius[j]`` uses the regularized value ``near_value[j]``
    instead of 1/r (the caller supplies e.g. the mean of 1/r over the source
    cell or panel).  Without the near rule, an exact coincidence returns
    ``had_zero = True`` so the caller can raise.
    """
    sources = np.ascontiguousarray(sources, dtype=np.float64)
    targets = np.ascontiguousarray(targets, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    n_src = sources.shape[0]
    n_tgt = targets.shape[0]
    out = np.zeros(n_tgt)
    if n_src == 0 or n_tgt == 0:
        return out, False
    had_zero = False
    step = _target_chunk(n_src)
    sx, sy, sz = sources[:, 0], sources[:, 1], sources[:, 2]
    for lo in range(0, n_tgt, step):
        hi = min(lo + step, n_tgt)
        t = targets[lo:hi]
        d2 = (t[:, 0:1] - sx) ** 2
        d2 += (t[:, 1:2] - sy) ** 2
        d2 += (t[:, 2:3] - sz) ** 2
        if use_near:
            close = d2 < near_radius**2
            d2[close] = 1.0  # avoid divide-by-zero; overwritten below
            k = 1.0 / np.sqrt(d2)
            if close.any():
                rows, cols = np.nonzero(close)
                k[rows, cols] = near_value[cols]
        else:
            zero = d2 == 0.0
            if zero.any():
                had_zero = True
                d2[zero] = 1.0
            k = 1.0 / np.sqrt(d2)
        out[lo:hi] = k @ weights
    return out, had_zero


def pairwise_energy(positions, masses):
    """(sum_{i<j} m_i m_j / r_ij, minimum pairwise distance)."""
    positions = np.ascontiguousarray(positions, dtype=np.float64)
    masses = np.asarray(masses, dtype=np.float64)
    n = positions.shape[0]
    if n < 2:
        return 0.0, np.inf
    energy = 0.0
    min_dist2 = np.inf
    step = _target_chunk(n)
    for lo in range(0, n, step):
        hi = min(lo + step, n)
        d2 = ((positions[lo:hi, None, :] - positions[None, :, :]) ** 2).sum(axis=2)
        # only strictly-upper pairs (j > i) contribute
        cols = np.arange(n)[None, :]
        upper = cols > np.arange(lo, hi)[:, None]
        if upper.any():
            min_dist2 = min(min_dist2, d2[upper].min())
        safe = np.where(d2 > 0.0, d2, 1.0)
        contrib = masses[lo:hi, None] * masses[None, :] / np.sqrt(safe)
        energy += contrib[upper].sum()
    return float(energy), float(np.sqrt(min_dist2))


def pairwise_gradient(positions, masses):
    """(dE/dP_i for the pairwise Coulomb energy, minimum pairwise distance).

    dE/dP_i = sum_{j != i} m_i m_j (P_j - P_i) / r_ij^3, i.e. the gradient of
    pairwise_energy; descending along -grad drives equal-sign charges apart.
    """
    positions = np.ascontiguousarray(positions, dtype=np.float64)
    masses = np.asarray(masses, dtype=np.float64)
    n = positions.shape[0]
    grad = np.zeros((n, 3))
    if n < 2:
        return grad, np.inf
    min_dist2 = np.inf
    step = _target_chunk(n)
    for lo in range(0, n, step):
        hi = min(lo + step, n)
        diff = positions[None, :, :] - positions[lo:hi, None, :]  # P_j - P_i
        d2 = (diff**2).sum(axis=2)
        cols = np.arange(n)[None, :]
        offdiag = cols != np.arange(lo, hi)[:, None]
        if offdiag.any():
            min_dist2 = min(min_dist2, d2[offdiag].min())
        safe = np.where(d2 > 0.0, d2, 1.0)
        inv_r3 = offdiag / (safe * np.sqrt(safe))
        coeff = masses[lo:hi, None] * masses[None, :] * inv_r3
        grad[lo:hi] = (coeff[:, :, None] * diff).sum(axis=1)
    return grad, float(np.sqrt(min_dist2))


def min_pair_distance(positions):
    """Minimum pairwise distance of a point cloud (inf for fewer than 2)."""
    _, dmin = pairwise_energy(positions, np.zeros(len(positions)))
    return dmin
