# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled Schnorr-Euchner sphere decoder kernel.

Twin of _sesd_py.sesd_kernel: same arithmetic in the same order (the build
disables FMA contraction), so results are bit-identical to the pure-Python
reference. See that module for the algorithm documentation.
"""

import numpy as np

from libc.math cimport ceil


def sesd_kernel(const double[:, ::1] r_mat, const double[::1] e,
                const double[::1] labels, double step, double initial_radius,
                long long node_budget):
    cdef Py_ssize_t n = e.shape[0]
    cdef Py_ssize_t n_labels = labels.shape[0]
    cdef double base = labels[0]
    cdef Py_ssize_t top = n - 1

    rt_arr = np.ascontiguousarray(np.asarray(r_mat).T)
    a_arr = np.zeros(n)
    a_mid_arr = np.zeros(n)
    idx_arr = np.zeros(n, dtype=np.int64)
    zig_arr = np.zeros(n, dtype=np.int64)
    dist_arr = np.zeros(n + 1)
    best_arr = np.zeros(n)
    first_arr = np.zeros(n)
    targets_arr = np.zeros((n, n))
    cdef double[:, ::1] rt = rt_arr
    cdef double[::1] a = a_arr
    cdef double[::1] a_mid = a_mid_arr
    cdef long long[::1] idx = idx_arr
    cdef long long[::1] zig = zig_arr
    cdef double[::1] dist = dist_arr
    cdef double[::1] best = best_arr
    cdef double[::1] first = first_arr
    cdef double[:, ::1] targets = targets_arr

    cdef double r_opt = initial_radius
    cdef bint found = False
    cdef bint have_first = False
    cdef bint aborted = False
    cdef long long nodes = 0

    cdef Py_ssize_t m = n
    cdef bint going_down = True
    cdef Py_ssize_t j
    cdef long long zi
    cdef double am1, mid, u, d, t

    while True:
        if going_down:
            m -= 1
            if m == top:
                for j in range(n):
                    targets[top, j] = e[j]
            else:
                am1 = a[m + 1]
                for j in range(m + 1):
                    targets[m, j] = targets[m + 1, j] - rt[m + 1, j] * am1
            mid = targets[m, m] / r_mat[m, m]
            a_mid[m] = mid
            u = (mid - base) / step - 0.5
            if u <= 0.0:
                zi = 0
            elif u > n_labels - 1:
                zi = n_labels - 1
            else:
                zi = <long long>ceil(u)
            idx[m] = zi
            a[m] = labels[zi]
            zig[m] = 1 if (mid - a[m]) > 0.0 else -1
        else:
            if m == top:
                break
            m += 1
            zi = idx[m] + zig[m]
            zig[m] = -(zig[m] + (1 if zig[m] > 0 else -1))
            if zi < 0 or zi > n_labels - 1:
                zi = zi + zig[m]
                zig[m] = -(zig[m] + (1 if zig[m] > 0 else -1))
                if zi < 0 or zi > n_labels - 1:
                    continue
            idx[m] = zi
            a[m] = labels[zi]

        nodes += 1
        if node_budget > 0 and nodes >= node_budget:
            aborted = True
            break
        d = r_mat[m, m] * (a[m] - a_mid[m])
        t = dist[m + 1] + d * d
        if t >= r_opt:
            going_down = False
            continue
        if m == 0:
            best[:] = a
            r_opt = t
            found = True
            if not have_first:
                first[:] = a
                have_first = True
            going_down = False
        else:
            dist[m] = t
            going_down = True

    return (best_arr, r_opt, int(nodes), bool(found),
            (first_arr if have_first else None), bool(aborted))
