# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled summation kernels; same contracts as numpy_backend."""

import numpy as np

from libc.math cimport sqrt, INFINITY


def point_source_sum(const double[:, ::1] sources, const double[::1] weights,
                     const double[:, ::1] targets, const double[::1] near_radius,
                     const double[::1] near_value, bint use_near):
    cdef Py_ssize_t n_src = sources.shape[0]
    cdef Py_ssize_t n_tgt = targets.shape[0]
    out_arr = np.zeros(n_tgt)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double tx, ty, tz, dx, dy, dz, d2, acc
    cdef bint had_zero = False
    for i in range(n_tgt):
        tx = targets[i, 0]
        ty = targets[i, 1]
        tz = targets[i, 2]
        acc = 0.0
        if use_near:
            for j in range(n_src):
                dx = tx - sources[j, 0]
                dy = ty - sources[j, 1]
                dz = tz - sources[j, 2]
                d2 = dx * dx + dy * dy + dz * dz
                if d2 < near_radius[j] * near_radius[j]:
                    acc += weights[j] * near_value[j]
                else:
                    acc += weights[j] / sqrt(d2)
        else:
            for j in range(n_src):
                dx = tx - sources[j, 0]
                dy = ty - sources[j, 1]
                dz = tz - sources[j, 2]
                d2 = dx * dx + dy * dy + dz * dz
                if d2 == 0.0:
                    had_zero = True
                else:
                    acc += weights[j] / sqrt(d2)
        out[i] = acc
    return out_arr, had_zero


def pairwise_energy(const double[:, ::1] positions, const double[::1] masses):
    cdef Py_ssize_t n = positions.shape[0]
    cdef Py_ssize_t i, j
    cdef double dx, dy, dz, d2, energy = 0.0, min_d2 = INFINITY
    if n < 2:
        return 0.0, INFINITY
    for i in range(n):
        for j in range(i + 1, n):
            dx = positions[i, 0] - positions[j, 0]
            dy = positions[i, 1] - positions[j, 1]
            dz = positions[i, 2] - positions[j, 2]
            d2 = dx * dx + dy * dy + dz * dz
            if d2 < min_d2:
                min_d2 = d2
            if d2 > 0.0:
                energy += masses[i] * masses[j] / sqrt(d2)
    return energy, sqrt(min_d2)


def pairwise_gradient(const double[:, ::1] positions, const double[::1] masses):
    cdef Py_ssize_t n = positions.shape[0]
    grad_arr = np.zeros((n, 3))
    cdef double[:, ::1] grad = grad_arr
    cdef Py_ssize_t i, j
    cdef double dx, dy, dz, d2, inv_r3, c, min_d2 = INFINITY
    if n < 2:
        return grad_arr, INFINITY
    for i in range(n):
        for j in range(i + 1, n):
            # diff = P_j - P_i
            dx = positions[j, 0] - positions[i, 0]
            dy = positions[j, 1] - positions[i, 1]
            dz = positions[j, 2] - positions[i, 2]
            d2 = dx * dx + dy * dy + dz * dz
            if d2 < min_d2:
                min_d2 = d2
            if d2 > 0.0:
                inv_r3 = 1.0 / (d2 * sqrt(d2))
                c = masses[i] * masses[j] * inv_r3
                grad[i, 0] += c * dx
                grad[i, 1] += c * dy
                grad[i, 2] += c * dz
                grad[j, 0] -= c * dx
                grad[j, 1] -= c * dy
                grad[j, 2] -= c * dz
    return grad_arr, sqrt(min_d2)
