"""Pure-Python Schnorr-Euchner sphere decoder kernel.

Reference implementation of the depth-first lattice enumeration. The compiled
kernel in _sesd_cy mirrors this code operation for operation (same arithmetic,
same order, no FMA contraction) so both backends return bit-identical results.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["sesd_kernel"]


def sesd_kernel(r_mat, e, labels, step, initial_radius, node_budget):
    """Minimize ||e - R a||^2 over label vectors a by Schnorr-Euchner search.

    Parameters
    ----------
    r_mat : (n, n) float64 array
        Upper triangular with strictly positive diagonal.
    e : (n,) float64 array
        Target vector.
    labels : (L,) float64 array
        Ascending, uniformly spaced label grid shared by all coordinates.
    step : float
        Nominal label spacing; used for the initial per-level rounding.
    initial_radius : float
        Squared-radius pruning bound. math.inf enumerates unconditionally;
        a finite bound below the optimum makes the search come back empty.
    node_budget : int
        Abort once this many nodes have been expanded; 0 disables the cap.
        An aborted search may return a non-optimal incumbent.

    Returns
    -------
    (best, r_opt, nodes, found, first_leaf, aborted)
        best is the incumbent label vector (undefined when found is False),
        r_opt its squared residual, nodes the number of partial-distance
        evaluations, first_leaf the first full candidate reached (the clipped
        nulling-and-cancelling point when initial_radius is infinite), and
        aborted reports whether the budget cut the enumeration short.

    Notes
    -----
    Levels are processed bottom row first (index n-1), so moving down the
    tree decreases the level index. Enumeration at each level walks the grid
    in zig-zag order starting from the rounded mid value; ties round to the
    lower label. Box clipping works on integer label indices, which keeps
    membership exact even when the float labels carry rounding error.

    Partial targets are cached per level: row m of the work matrix holds
    e[j] - sum_{j'>m} R[j, j'] a[j'] for j <= m, updated incrementally on
    each descent. That makes re-descents near the leaves O(1) instead of
    O(n), which is where degenerate trees spend nearly all their nodes.
    """
    n = e.shape[0]
    n_labels = labels.shape[0]
    base = labels[0]
    top = n - 1
    # Column access pattern; transposed copy keeps the compiled twin's loops
    # contiguous and the arithmetic identical.
    rt = np.ascontiguousarray(r_mat.T)

    a = np.zeros(n)
    a_mid = np.zeros(n)
    idx = np.zeros(n, dtype=np.int64)
    zig = np.zeros(n, dtype=np.int64)
    dist = np.zeros(n + 1)
    best = np.zeros(n)
    first = np.zeros(n)
    targets = np.zeros((n, n))

    r_opt = float(initial_radius)
    found = False
    have_first = False
    aborted = False
    nodes = 0

    m = n
    going_down = True
    while True:
        if going_down:
            m -= 1
            if m == top:
                targets[top, :] = e
            else:
                am1 = a[m + 1]
                targets[m, : m + 1] = (
                    targets[m + 1, : m + 1] - rt[m + 1, : m + 1] * am1
                )
            mid = targets[m, m] / r_mat[m, m]
            a_mid[m] = mid
            # Clamp in float space: ceil(u) <= 0 iff u <= 0 and
            # ceil(u) > L-1 iff u > L-1, so extreme mids never reach the
            # float-to-int conversion.
            u = (mid - base) / step - 0.5
            if u <= 0.0:
                zi = 0
            elif u > n_labels - 1:
                zi = n_labels - 1
            else:
                zi = int(math.ceil(u))
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
                # The near side of the box is exhausted; the zig-zag step
                # after next lands on the far side if anything is left there.
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

    return best, r_opt, nodes, found, (first if have_first else None), aborted
