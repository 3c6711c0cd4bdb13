"""Covariant calculus along lifted curves.

A curve enters as samples of CurveState: position x, velocity y = dx/ds,
and the horizontal fields u = DT (tension) and w = D^2 T, all expressed in
chart components with reference vector y.  The covariant derivative along
the curve of a horizontal field X is

    (DX)^i = dX^i/ds + N^i_j X^j + C^i_{jk} X^j u^k

with every coefficient evaluated at (x, y).  The fourth-order quantity
tau2 = D^3 T - A, A = -R(u) + P(u,u) - C(u,w), vanishes exactly on
biharmonic curves and is the residual everything here reports.
"""
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from . import fd
from .errors import (DimensionError, InsufficientSamples, InvalidParams)
from .geometry import full_apparatus


@dataclass
class CurveState:
    """One sample of the biharmonic first-order system."""
    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    w: np.ndarray

    def pack(self):
        return np.concatenate([self.x, self.y, self.u, self.w])

    @classmethod
    def unpack(cls, z, n):
        return cls(x=z[0:n].copy(), y=z[n:2 * n].copy(),
                   u=z[2 * n:3 * n].copy(), w=z[3 * n:4 * n].copy())


@dataclass
class FrenetFrame:
    vectors: List[np.ndarray]
    curvatures: List[float]


@dataclass
class BitensionReport:
    tau2: np.ndarray
    A: np.ndarray
    norm_tau2: float


def _quad(vals, h):
    """Composite Simpson when the sample count is odd, trapezoid otherwise."""
    m = len(vals)
    if m < 3:
        raise InsufficientSamples(f"quadrature needs >= 3 samples, got {m}")
    vals = np.asarray(vals, float)
    if m % 2 == 1:
        sw = np.ones(m)
        sw[1:-1:2] = 4.0
        sw[2:-1:2] = 2.0
        return float(h / 3.0 * (sw @ vals))
    return float(h * (vals.sum() - 0.5 * (vals[0] + vals[-1])))


def tension(metric, x, y, dyds, config=None, backend='jet'):
    """tau^i = dy^i/ds + 2 G^i(x, y)."""
    kw = {} if config is None else {'config': config}
    app = full_apparatus(metric, x, y, backend=backend, **kw)
    return np.asarray(dyds, float) + 2.0 * app['G']


def covariant_derivative_along(metric, state, X, dXds, backend='jet'):
    """D of the horizontal field X along the curve, reference vector y."""
    app = full_apparatus(metric, state.x, state.y, backend=backend)
    X = np.asarray(X, float)
    return (np.asarray(dXds, float) + app['N'] @ X
            + np.einsum('ijk,j,k->i', app['C_mix'], X, state.u))


def bitension(metric, state, dwds, backend='jet'):
    """tau2 = D^3 T - A at one state; dwds supplied by the caller.

    Along an integrated trajectory take dwds from sample differencing
    (bitension_series) so the residual is measured, not assumed.
    """
    app = full_apparatus(metric, state.x, state.y, backend=backend)
    return _bitension_from_app(app, state, dwds)


def _bitension_from_app(app, state, dwds):
    u, w = state.u, state.w
    Cm = app['C_mix']
    D3T = (np.asarray(dwds, float) + app['N'] @ w
           + np.einsum('ijk,j,k->i', Cm, w, u))
    A = (-app['R_jac'] @ u
         + np.einsum('ijk,j,k->i', app['P_mix'], u, u)
         - np.einsum('ijk,j,k->i', Cm, u, w))
    tau2 = D3T - A
    return BitensionReport(tau2=tau2, A=A,
                           norm_tau2=float(np.sqrt(tau2 @ app['g'] @ tau2)))


def frenet_frame(metric, x, y, derivative_chain, dependence_tol=1e-10,
                 backend='jet'):
    """g-orthonormal frame from [DT, D^2T, ...] by modified Gram-Schmidt.

    kappa1 is the norm of DT; higher curvatures are ratios of successive
    orthogonalization residuals.  A residual below the dependence
    threshold truncates the frame; that is a report, not an error.
    """
    app = full_apparatus(metric, x, y, backend=backend)
    g, F = app['g'], app['F']
    e1 = np.asarray(y, float) / F
    vectors = [e1]
    curvatures = []
    chain = [np.asarray(v, float) for v in derivative_chain]
    scale = max([1.0] + [float(np.sqrt(v @ g @ v)) for v in chain])
    prev_res = None
    for k, v in enumerate(chain):
        if len(vectors) >= metric.dim:
            break
        r = v.copy()
        for e in vectors:
            r -= float(e @ g @ r) * e
        rn = float(np.sqrt(max(r @ g @ r, 0.0)))
        if rn < dependence_tol * scale:
            break
        vectors.append(r / rn)
        if k == 0:
            curvatures.append(float(np.sqrt(v @ g @ v)))
        else:
            curvatures.append(rn / prev_res)
        prev_res = rn
    return FrenetFrame(vectors=vectors, curvatures=curvatures)


def _uniform_h(s):
    s = np.asarray(s, float)
    if len(s) < 2:
        raise InsufficientSamples("need at least 2 samples")
    hs = np.diff(s)
    h = hs[0]
    if np.max(np.abs(hs - h)) > 1e-9 * max(abs(h), 1e-300):
        raise InvalidParams("samples are not uniformly spaced")
    return float(h)


def bienergy(metric, trajectory, backend='jet'):
    """(E1, E2): energy and bienergy of the sampled curve.

    E1 = 1/2 int <T,T> ds = 1/2 int F^2 ds;  E2 = 1/2 int <DT,DT> ds.
    """
    h = _uniform_h(trajectory.s)
    f2 = []
    udotu = []
    for st in trajectory.states:
        app = full_apparatus(metric, st.x, st.y, backend=backend)
        f2.append(app['F'] ** 2)
        udotu.append(float(st.u @ app['g'] @ st.u))
    return 0.5 * _quad(f2, h), 0.5 * _quad(udotu, h)


def bitension_series(metric, trajectory, backend='jet'):
    """Measured tau2 at every sample: dw/ds by grid differencing.

    Returns (tau2 array (m, n), norms (m,)).  Edge samples use one-sided
    stencils and carry slightly more differencing noise.
    """
    h = _uniform_h(trajectory.s)
    w_arr = np.array([st.w for st in trajectory.states])
    dwds = fd.grid_derivative(w_arr, h, order=1)
    tau2 = np.zeros_like(w_arr)
    norms = np.zeros(len(w_arr))
    for i, st in enumerate(trajectory.states):
        app = full_apparatus(metric, st.x, st.y, backend=backend)
        rep = _bitension_from_app(app, st, dwds[i])
        tau2[i] = rep.tau2
        norms[i] = rep.norm_tau2
    return tau2, norms


def _e2_of(metric, x, y, backend='jet'):
    """Signed 2D normal: +90-degree rotation of y, g-orthonormalized."""
    app = full_apparatus(metric, x, y, backend=backend)
    g, F = app['g'], app['F']
    y = np.asarray(y, float)
    e1 = y / F
    v = np.array([-y[1], y[0]])
    r = v - float(e1 @ g @ v) * e1
    rn = float(np.sqrt(r @ g @ r))
    e2 = r / rn
    if np.linalg.det(np.stack([e1, e2])) < 0:
        e2 = -e2
    return app, e1, e2


def residual_2d(metric, x, y, kappa1, backend='jet'):
    """kappa1^2 - <R(e2) - kappa1 P(e2,e2), e2> at a unit-speed 2D sample.

    kappa1 is signed: positive when the tension points along the
    counterclockwise normal e2.  Zero on proper biharmonic curves.
    """
    if metric.dim != 2:
        raise DimensionError(f"residual_2d needs dim 2, metric has {metric.dim}")
    app, e1, e2 = _e2_of(metric, x, y, backend=backend)
    g = app['g']
    rterm = float(e2 @ g @ (app['R_jac'] @ e2))
    pterm = float(e2 @ g @ np.einsum('ijk,j,k->i', app['P_mix'], e2, e2))
    return kappa1 ** 2 - (rterm - kappa1 * pterm)


def first_variation_check(metric, trajectory, V, eps=(1e-3, 1e-4),
                          backend='jet'):
    """Finite-difference dE2/d(eps) against int <tau2, V> ds.

    V is the variation field sampled on the trajectory grid and must
    vanish at both endpoints.  The derivative is Richardson-extrapolated
    from the two supplied centered steps.
    """
    V = np.asarray(V, float)
    s = np.asarray(trajectory.s, float)
    h = _uniform_h(s)
    if V.shape != (len(s), metric.dim):
        raise InvalidParams(f"variation field shape {V.shape} mismatched")
    vmax = np.max(np.abs(V))
    if max(np.max(np.abs(V[0])), np.max(np.abs(V[-1]))) > 1e-12 * max(vmax, 1.0):
        raise InvalidParams("variation field must vanish at the endpoints")
    xs = np.array([st.x for st in trajectory.states])

    def e2_of(epsv):
        xe = xs + epsv * V
        ye = fd.grid_derivative(xe, h, order=1)
        dye = fd.grid_derivative(ye, h, order=1)
        vals = []
        for i in range(len(s)):
            app = full_apparatus(metric, xe[i], ye[i], backend=backend)
            u = dye[i] + 2.0 * app['G']
            vals.append(float(u @ app['g'] @ u))
        return 0.5 * _quad(vals, h)

    d_eps = []
    for ev in eps:
        d_eps.append((e2_of(+ev) - e2_of(-ev)) / (2.0 * ev))
    e1sq, e2sq = eps[0] ** 2, eps[1] ** 2
    lhs = (e1sq * d_eps[1] - e2sq * d_eps[0]) / (e1sq - e2sq)

    tau2, _ = bitension_series(metric, trajectory, backend=backend)
    integrand = []
    for i, st in enumerate(trajectory.states):
        app = full_apparatus(metric, st.x, st.y, backend=backend)
        integrand.append(float(tau2[i] @ app['g'] @ V[i]))
    rhs = _quad(integrand, h)
    return lhs, rhs
