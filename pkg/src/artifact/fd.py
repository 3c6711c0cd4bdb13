"""Finite-difference backend: the independent cross-check for the jet route.

Raw partials of L = F^2 are formed by tensor-product central stencils with
Fornberg weights.  Step sizes are per-derivative-order: roundoff grows like
h^{-k} for a k-th derivative, so a single step tuned for first derivatives
is far from optimal at order four.  The base steps below were measured to
give ~1e-8 agreement with closed-form tensors on Randers-type norms.
"""
import itertools
from collections import Counter

import numpy as np

# half-width of the central stencil and base step, per derivative order
STENCIL_HALF = {1: 3, 2: 3, 3: 4, 4: 4}
BASE_STEP = {1: 6.0e-3, 2: 1.1e-2, 3: 1.4e-2, 4: 1.8e-2}


def fornberg_weights(z, nodes, m):
    """Weights of the m-th derivative at z from the given nodes (Fornberg)."""
    n = len(nodes)
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = nodes[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = nodes[i] - z
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def _stencil(order):
    m = STENCIL_HALF[order]
    nodes = np.arange(-m, m + 1, dtype=float)
    return nodes, fornberg_weights(0.0, nodes, order)


_GRID_W = {}


def grid_derivative(arr, h, order=1, width=7):
    """Per-sample derivative of uniformly spaced samples, windowed Fornberg.

    Interior samples get centered stencils; near the edges the window
    shifts, staying inside the data (one-sided, same width, lower
    effective accuracy).  arr may be (m,) or (m, k); differentiation is
    along axis 0.
    """
    arr = np.asarray(arr, float)
    m = arr.shape[0]
    if m <= order:
        raise ValueError(f"{m} samples cannot support an order-{order} derivative")
    width = min(width, m)
    out = np.zeros(arr.shape, float)
    for i in range(m):
        lo = min(max(i - width // 2, 0), m - width)
        key = (width, order, lo - i)
        if key not in _GRID_W:
            nodes = np.arange(lo - i, lo - i + width, dtype=float)
            _GRID_W[key] = fornberg_weights(0.0, nodes, order)
        out[i] = np.tensordot(_GRID_W[key] / h ** order,
                              arr[lo:lo + width], axes=1)
    return out


def fd_partial(L, x, y, xdirs, ydirs, step_scale=1.0):
    """Mixed partial of L at (x, y); directions given as index lists.

    Repeated indices raise the per-variable order; the stencil is the
    tensor product of one-dimensional stencils per distinct variable.
    """
    per_var = Counter()
    for a in xdirs:
        per_var[('x', a)] += 1
    for i in ydirs:
        per_var[('y', i)] += 1
    k_total = len(xdirs) + len(ydirs)
    if k_total == 0:
        return L(np.asarray(x, float), np.asarray(y, float))
    base = BASE_STEP[k_total] * step_scale
    sy = base * max(1.0, float(np.linalg.norm(y)))
    sx = base * max(1.0, float(np.linalg.norm(x)))
    items = list(per_var.items())
    grids, weights = [], []
    for (kind, _), order in items:
        nodes, w = _stencil(order)
        h = sx if kind == 'x' else sy
        grids.append(nodes * h)
        weights.append(w / h ** order)
    total = 0.0
    shape = [len(g) for g in grids]
    for flat in np.ndindex(*shape):
        xx = np.array(x, dtype=float)
        yy = np.array(y, dtype=float)
        wprod = 1.0
        for t, ((kind, idx), _) in enumerate(items):
            wprod *= weights[t][flat[t]]
            if kind == 'x':
                xx[idx] += grids[t][flat[t]]
            else:
                yy[idx] += grids[t][flat[t]]
        total += wprod * L(xx, yy)
    return total


def raw_partials_fd(L, x, y, step_scale=1.0):
    """All raw partial arrays of L at (x, y); layout matches the jet route."""
    n = len(x)
    r = {'L': L(np.asarray(x, float), np.asarray(y, float))}
    part = lambda xd, yd: fd_partial(L, x, y, xd, yd, step_scale)
    r['Lx'] = np.array([part([a], []) for a in range(n)])
    r['Ly'] = np.array([part([], [i]) for i in range(n)])
    Lyy = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            Lyy[i, j] = Lyy[j, i] = part([], [i, j])
    r['Lyy'] = Lyy
    Lxx = np.zeros((n, n))
    for a in range(n):
        for b in range(a, n):
            Lxx[a, b] = Lxx[b, a] = part([a, b], [])
    r['Lxx'] = Lxx
    r['Lxy'] = np.array([[part([a], [i]) for i in range(n)] for a in range(n)])
    Lyyy = np.zeros((n, n, n))
    for comb in itertools.combinations_with_replacement(range(n), 3):
        v = part([], list(comb))
        for p in set(itertools.permutations(comb)):
            Lyyy[p] = v
    r['Lyyy'] = Lyyy
    Lxyy = np.zeros((n, n, n))
    for a in range(n):
        for i in range(n):
            for j in range(i, n):
                Lxyy[a, i, j] = Lxyy[a, j, i] = part([a], [i, j])
    r['Lxyy'] = Lxyy
    Lxxy = np.zeros((n, n, n))
    for a in range(n):
        for b in range(a, n):
            for i in range(n):
                v = part([a, b], [i])
                Lxxy[a, b, i] = Lxxy[b, a, i] = v
    r['Lxxy'] = Lxxy
    Lyyyy = np.zeros((n, n, n, n))
    for comb in itertools.combinations_with_replacement(range(n), 4):
        v = part([], list(comb))
        for p in set(itertools.permutations(comb)):
            Lyyyy[p] = v
    r['Lyyyy'] = Lyyyy
    Lxyyy = np.zeros((n, n, n, n))
    for a in range(n):
        for comb in itertools.combinations_with_replacement(range(n), 3):
            v = part([a], list(comb))
            for p in set(itertools.permutations(comb)):
                Lxyyy[(a,) + p] = v
    r['Lxyyy'] = Lxyyy
    Lxxyy = np.zeros((n, n, n, n))
    for a in range(n):
        for b in range(a, n):
            for i in range(n):
                for j in range(i, n):
                    v = part([a, b], [i, j])
                    for aa, bb in {(a, b), (b, a)}:
                        for ii, jj in {(i, j), (j, i)}:
                            Lxxyy[aa, bb, ii, jj] = v
    r['Lxxyy'] = Lxxyy
    return r
