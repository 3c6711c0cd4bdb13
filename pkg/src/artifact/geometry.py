"""Pointwise Finsler tensors from a user-supplied norm.

Everything here is derived from ONE scalar function, L(x, y) = F(x, y)^2:
the fundamental tensor g, Cartan torsion C, geodesic spray G, nonlinear
connection N, affine connection Gamma, curvature R, Landsberg tensor P and
the vertical derivative of C.  Raw partials of L come from the jet engine
(default) or the finite-difference oracle (cross-check); the chain-rule
assembly below is shared by both and is backend-agnostic.

Index conventions, fixed once for the whole package:
  g[i,j]        fundamental tensor            C_low[i,j,k]   fully lowered
  C_mix[i,j,k]  = g^{ih} C_low[h,j,k]         G[i]           spray
  N[i,j]        = dG^i/dy^j                   Gamma[i,j,k]   affine coeffs
  R3[i,j,k]     curvature, antisymmetric jk   R_jac[i,j]     = R3[i,k,j] y^k
  P_mix[i,j,k]  Landsberg                     Ctilde4[i,j,l,k] vertical DC
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import fd, jets
from .errors import (DegenerateFlag, DegenerateTangent, DimensionError,
                     DomainError, NotPositiveDefinite)


@dataclass(frozen=True)
class MetricSpec:
    """A Finsler norm plus the chart bookkeeping needed to query it.

    F takes (x, y) as sequences of scalar-like values and must be written
    with arithmetic and the analytic shims from artifact.jets (sqrt, exp,
    ...) so the same definition serves floats and jet scalars.  domain is
    a predicate on the position array; None means the whole chart.
    """
    dim: int
    F: Callable
    domain: Optional[Callable] = None
    label: str = ""

    def contains(self, x):
        return True if self.domain is None else bool(self.domain(np.asarray(x, float)))


@dataclass(frozen=True)
class TangentSample:
    x: np.ndarray
    y: np.ndarray


@dataclass(frozen=True)
class JetConfig:
    """Differentiation and validation knobs.

    fd_step is the base step of the finite-difference oracle for first
    derivatives; higher orders scale it by measured-optimal ratios.
    """
    fd_step: float = fd.BASE_STEP[1]
    tol_symmetry: float = 1e-8
    y_floor: float = 1e-8


_DEFAULT_CONFIG = JetConfig()


@dataclass(frozen=True)
class PointGeometry:
    """Connection-level tensors at one tangent sample."""
    x: np.ndarray
    y: np.ndarray
    F: float
    g: np.ndarray
    g_inv: np.ndarray
    C_low: np.ndarray
    C_mixed: np.ndarray
    G: np.ndarray
    N: np.ndarray
    Gamma: np.ndarray


@dataclass(frozen=True)
class CurvatureData:
    """Curvature-level tensors at one tangent sample."""
    R3: np.ndarray
    R_jac: np.ndarray
    P: np.ndarray


def _sample(metric, x, y, config):
    """Validate and coerce one tangent sample."""
    if isinstance(x, TangentSample) and y is None:
        x, y = x.x, x.y
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (metric.dim,) or y.shape != (metric.dim,):
        raise DimensionError(
            f"sample shape {x.shape}/{y.shape}, metric dim {metric.dim}")
    if not metric.contains(x):
        raise DomainError(f"x={x.tolist()} outside domain of {metric.label!r}")
    if np.linalg.norm(y) < config.y_floor:
        raise DegenerateTangent(f"|y|={np.linalg.norm(y):.3e} below floor")
    return x, y


def _L_of(metric):
    def L(xs, ys):
        f = metric.F(xs, ys)
        return f * f
    return L


def raw_partials(metric, x, y=None, backend='jet', config=_DEFAULT_CONFIG):
    """Raw partial arrays of L = F^2 at a validated sample."""
    x, y = _sample(metric, x, y, config)
    L = _L_of(metric)
    if backend == 'jet':
        return jets.raw_partials_jet(L, x, y)
    if backend == 'fd':
        return fd.raw_partials_fd(L, x, y,
                                  step_scale=config.fd_step / fd.BASE_STEP[1])
    raise ValueError(f"unknown backend {backend!r}")


def assemble_apparatus(r, y):
    """Chain-rule assembly of the full apparatus from raw partials of L."""
    y = np.asarray(y, float)
    out = {}
    if r['L'] <= 0.0:
        raise NotPositiveDefinite("F^2 <= 0 at sample; norm invalid here")
    out['F'] = float(np.sqrt(r['L']))
    g = r['Lyy'] / 2.0
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("fundamental tensor not positive definite")
    ginv = np.linalg.inv(g)
    out['g'], out['ginv'] = g, ginv
    C_low = r['Lyyy'] / 4.0
    C_mix = np.einsum('ih,hjk->ijk', ginv, C_low)
    out['C_low'], out['C_mix'] = C_low, C_mix

    dgdx = r['Lxyy'] / 2.0                       # [a,i,j]
    dgdy = r['Lyyy'] / 2.0                       # [i,j,k] = dg_ij/dy^k
    d2gdyy = r['Lyyyy'] / 2.0                    # [i,j,k,m]
    d2gdxy = r['Lxyyy'] / 2.0                    # [a,i,j,m]

    # lowered spray potential H_l, then G^i = g^{il} H_l
    H = (np.einsum('k,kl->l', y, r['Lxy']) - r['Lx']) / 4.0
    G = ginv @ H
    out['H'], out['G'] = H, G

    dHdy = (r['Lxy'].T - r['Lxy']
            + np.einsum('k,klj->lj', y, r['Lxyy'])) / 4.0             # [l,j]
    dHdx = (np.einsum('k,kal->al', y, r['Lxxy']).T - r['Lxx']) / 4.0  # [l,a]

    d2Hdyy = (np.einsum('jlm->ljm', r['Lxyy'])
              - np.einsum('ljm->ljm', r['Lxyy'])
              + np.einsum('mlj->ljm', r['Lxyy'])
              + np.einsum('k,kljm->ljm', y, r['Lxyyy'])) / 4.0        # [l,j,m]
    d2Hdxy = (np.einsum('ajl->lja', r['Lxxy'])
              - np.einsum('alj->lja', r['Lxxy'])
              + np.einsum('k,kalj->lja', y, r['Lxxyy'])) / 4.0        # [l,j,a]

    dginv_dy = -np.einsum('ip,pqm,ql->ilm', ginv, dgdy, ginv)         # [i,l,m]
    dginv_dx = -np.einsum('ip,apq,ql->ila', ginv, dgdx, ginv)         # [i,l,a]
    # second derivatives of g^{-1}; dginv already carries one minus sign
    d2ginv_dyy = (-np.einsum('ipj,pqm,ql->iljm', dginv_dy, dgdy, ginv)
                  - np.einsum('ip,pqm,qlj->iljm', ginv, dgdy, dginv_dy)
                  - np.einsum('ip,pqjm,ql->iljm', ginv, d2gdyy, ginv))
    d2ginv_dxy = (-np.einsum('ipa,pqj,ql->ilja', dginv_dx, dgdy, ginv)
                  - np.einsum('ip,pqj,qla->ilja', ginv, dgdy, dginv_dx)
                  - np.einsum('ip,apqj,ql->ilja', ginv, d2gdxy, ginv))

    N = np.einsum('ilj,l->ij', dginv_dy, H) + ginv @ dHdy
    out['N'] = N
    dNdy = (np.einsum('iljm,l->ijm', d2ginv_dyy, H)
            + np.einsum('ilj,lm->ijm', dginv_dy, dHdy)
            + np.einsum('ilm,lj->ijm', dginv_dy, dHdy)
            + np.einsum('il,ljm->ijm', ginv, d2Hdyy))                 # [i,j,m]
    dNdx = (np.einsum('ilja,l->ija', d2ginv_dxy, H)
            + np.einsum('ilj,la->ija', dginv_dy, dHdx)
            + np.einsum('ila,lj->ija', dginv_dx, dHdy)
            + np.einsum('il,lja->ija', ginv, d2Hdxy))                 # [i,j,a]

    # horizontal derivative delta_k = d_x^k - N^l_k d_y^l, then curvature
    deltaN = dNdx - np.einsum('lk,ijl->ijk', N, dNdy)                 # [i,j,k]
    R3 = deltaN - deltaN.transpose(0, 2, 1)
    out['R3'] = R3
    out['R_jac'] = np.einsum('ikj,k->ij', R3, y)

    delta_g = dgdx - np.einsum('lk,hjl->khj', N, dgdy)   # [k,h,j] = delta_k g_hj
    out['delta_g'] = delta_g
    T1 = np.einsum('khj->hjk', delta_g)
    T2 = np.einsum('jhk->hjk', delta_g)
    T3 = np.einsum('hjk->hjk', delta_g)
    out['Gamma'] = 0.5 * np.einsum('ih,hjk->ijk', ginv, T1 + T2 - T3)

    dCmix_dx = (np.einsum('ila,ljk->aijk', dginv_dx, C_low)
                + np.einsum('il,aljk->aijk', ginv, r['Lxyyy'] / 4.0))
    dCmix_dy = (np.einsum('ilm,ljk->ijkm', dginv_dy, C_low)
                + np.einsum('il,ljkm->ijkm', ginv, r['Lyyyy'] / 4.0))
    out['dCmix_dy'] = dCmix_dy
    # y-contracted horizontal derivative of C uses Euler homogeneity:
    # y^l delta_l = y^k d_x^k - 2 G^j d_y^j
    P = (np.einsum('a,aijk->ijk', y, dCmix_dx)
         - 2.0 * np.einsum('m,ijkm->ijk', G, dCmix_dy)
         + np.einsum('ih,hjk->ijk', N, C_mix)
         - np.einsum('hj,ihk->ijk', N, C_mix)
         - np.einsum('hk,ijh->ijk', N, C_mix))
    out['P_mix'] = P
    out['P_low'] = np.einsum('li,ijk->ljk', g, P)

    # vertical covariant derivative of C: [i, j, l, k] = (D_k C)^i_{jl}
    out['Ctilde4'] = (dCmix_dy
                      + np.einsum('hjl,ihk->ijlk', C_mix, C_mix)
                      - np.einsum('ihl,hjk->ijlk', C_mix, C_mix)
                      - np.einsum('ijh,hlk->ijlk', C_mix, C_mix))
    return out


def full_apparatus(metric, x, y=None, config=_DEFAULT_CONFIG, backend='jet'):
    """Every tensor this package knows, as a dict, at one tangent sample."""
    x, y = _sample(metric, x, y, config)
    L = _L_of(metric)
    if backend == 'jet':
        r = jets.raw_partials_jet(L, x, y)
    elif backend == 'fd':
        r = fd.raw_partials_fd(L, x, y,
                               step_scale=config.fd_step / fd.BASE_STEP[1])
    else:
        raise ValueError(f"unknown backend {backend!r}")
    out = assemble_apparatus(r, y)
    out['x'], out['y'] = x, y
    return out


# ---- public operations ---------------------------------------------------

def eval_F(metric, x, y=None, config=_DEFAULT_CONFIG):
    x, y = _sample(metric, x, y, config)
    f = float(metric.F(x, y))
    if f <= 0.0:
        raise NotPositiveDefinite(f"F={f} not positive at sample")
    return f


def metric_tensor(metric, x, y=None, config=_DEFAULT_CONFIG, backend='jet'):
    app = full_apparatus(metric, x, y, config, backend)
    return app['g'], app['ginv']


def cartan_tensor(metric, x, y=None, config=_DEFAULT_CONFIG, backend='jet'):
    app = full_apparatus(metric, x, y, config, backend)
    return app['C_low'], app['C_mix']


def spray_and_connection(metric, x, y=None, config=_DEFAULT_CONFIG,
                         backend='jet'):
    app = full_apparatus(metric, x, y, config, backend)
    return PointGeometry(x=app['x'], y=app['y'], F=app['F'], g=app['g'],
                         g_inv=app['ginv'], C_low=app['C_low'],
                         C_mixed=app['C_mix'], G=app['G'], N=app['N'],
                         Gamma=app['Gamma'])


def curvature_data(metric, x, y=None, config=_DEFAULT_CONFIG, backend='jet'):
    app = full_apparatus(metric, x, y, config, backend)
    return CurvatureData(R3=app['R3'], R_jac=app['R_jac'], P=app['P_mix'])


def flag_curvature(metric, x, y, X, config=_DEFAULT_CONFIG, backend='jet'):
    """Sectional curvature of the flag with pole y and edge X."""
    app = full_apparatus(metric, x, y, config, backend)
    g, F = app['g'], app['F']
    X = np.asarray(X, float)
    yhat = app['y'] / F
    Xp = X - float(yhat @ g @ X) * yhat
    nrm = float(np.sqrt(Xp @ g @ Xp))
    if nrm < 1e-12 * max(1.0, float(np.linalg.norm(X))):
        raise DegenerateFlag("flag edge is g-parallel to y")
    Xhat = Xp / nrm
    return float(Xhat @ g @ (app['R_jac'] @ Xhat)) / F ** 2


def c_tilde(metric, x, y, X, Y, Z, config=_DEFAULT_CONFIG, backend='jet'):
    """Vertical covariant derivative of C along X, applied to (Y, Z)."""
    app = full_apparatus(metric, x, y, config, backend)
    return np.einsum('ijlk,j,l,k->i', app['Ctilde4'],
                     np.asarray(Y, float), np.asarray(Z, float),
                     np.asarray(X, float))


def f_operator(metric, x, y, X, config=_DEFAULT_CONFIG, backend='jet'):
    """Quartic curvature form <-R(X) + (4/3)P(X,X) + (1/3)Ct(X,X,X), X>."""
    app = full_apparatus(metric, x, y, config, backend)
    X = np.asarray(X, float)
    vec = (-app['R_jac'] @ X
           + (4.0 / 3.0) * np.einsum('ijk,j,k->i', app['P_mix'], X, X)
           + (1.0 / 3.0) * np.einsum('ijlk,j,l,k->i', app['Ctilde4'], X, X, X))
    return float(vec @ app['g'] @ X)
