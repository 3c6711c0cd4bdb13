"""Adaptive integration of geodesic and biharmonic flows.

The biharmonic equation is integrated as the first-order system

    dx/ds = y
    dy/ds = u - N(x,y) y                       (u = DT)
    du/ds = w - N u - C(u, u)                  (w = D^2 T)
    dw/ds = A - N w - C(w, u)                  (A = -R(u) + P(u,u) - C(u,w))

with an embedded Dormand-Prince 5(4) pair, PI step-size control, and
first-same-as-last stage reuse.  Sample points are hit exactly by the
stepper (no interpolation), so finite differences over the returned
samples see only solver-level error; dense output, when requested,
additionally keeps cubic Hermite data at the internal steps.

Soft failures (leaving the chart, step underflow, loss of the unit-speed
admissibility band) end the run early and are reported as a status flag
on the partial trajectory, never as an exception.
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import fd
from .curves import CurveState, _bitension_from_app
from .errors import (ArtifactError, DegenerateHint, DimensionError,
                     InvalidParams)
from .geometry import eval_F, full_apparatus

OK = 'ok'
DOMAIN_EXIT = 'domain_exit'
STEP_UNDERFLOW = 'step_underflow'
ADMISSIBILITY_LOST = 'admissibility_lost'

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784,
                11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                -92097 / 339200, 187 / 2100, 1 / 40])
_ERR = _B5 - _B4


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = 0.25
    min_step: float = 1e-12
    s_span: Tuple[float, float] = (0.0, 1.0)
    dense_output: bool = False

    def __post_init__(self):
        if not (0.0 < self.min_step <= self.max_step):
            raise InvalidParams("need 0 < min_step <= max_step")
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise InvalidParams("tolerances must be positive")
        if not self.s_span[1] > self.s_span[0]:
            raise InvalidParams("s_span must be increasing")


@dataclass
class Trajectory:
    s: np.ndarray
    states: List[CurveState]
    kind: str                      # 'geodesic' | 'biharmonic'
    status: str = OK
    detail: str = ""
    F_series: Optional[np.ndarray] = None
    kappa1_series: Optional[np.ndarray] = None
    residual_series: Optional[np.ndarray] = None
    dense: Optional[list] = field(default=None, repr=False)

    def array(self, name):
        return np.array([getattr(st, name) for st in self.states])

    def evaluate(self, s_query):
        """Cubic Hermite evaluation between internal steps (dense runs only)."""
        if not self.dense:
            raise InvalidParams("trajectory was integrated without dense output")
        s_query = float(s_query)
        lo, hi = self.dense[0][0], self.dense[-1][0] + self.dense[-1][1]
        if not (lo <= s_query <= hi + 1e-12 * max(1.0, abs(hi))):
            raise InvalidParams(f"s={s_query} outside integrated range")
        rec = self.dense[-1]
        for r in self.dense:
            if s_query <= r[0] + r[1]:
                rec = r
                break
        s0, h, z0, f0, z1, f1 = rec
        t = (s_query - s0) / h
        h00 = 2 * t ** 3 - 3 * t ** 2 + 1
        h10 = t ** 3 - 2 * t ** 2 + t
        h01 = -2 * t ** 3 + 3 * t ** 2
        h11 = t ** 3 - t ** 2
        z = h00 * z0 + h10 * h * f0 + h01 * z1 + h11 * h * f1
        n = len(z0) // (2 if self.kind == 'geodesic' else 4)
        if self.kind == 'geodesic':
            return CurveState(x=z[:n], y=z[n:], u=np.zeros(n), w=np.zeros(n))
        return CurveState.unpack(z, n)


@dataclass
class MonitorReport:
    F_drift: float
    kappa1_series: np.ndarray
    lambda_series: np.ndarray
    residual_series: np.ndarray


class _SoftStop(Exception):
    def __init__(self, status, detail):
        self.status = status
        self.detail = detail


def _drive(rhs, z0, samples, cfg, metric=None, admissibility_tol=None,
           renormalize_steps=False, n=None):
    """Step z through every entry of samples; returns partial results on
    soft failure.  rhs may raise ArtifactError/ValueError for points off
    the chart; that rejects the step and, at min_step, flags domain_exit.
    """
    z = np.asarray(z0, float).copy()
    s = float(samples[0])
    try:
        f = rhs(s, z)
    except (ArtifactError, ValueError, ZeroDivisionError) as e:
        raise InvalidParams(f"right-hand side invalid at initial state: {e}")
    out_z = [z.copy()]
    dense = [] if cfg.dense_output else None
    status, detail = OK, ""
    F0 = None
    if admissibility_tol is not None:
        F0 = eval_F(metric, z[:n], z[n:2 * n])

    scale0 = cfg.abs_tol + cfg.rel_tol * np.abs(z)
    d0 = math.sqrt(float(np.mean((z / scale0) ** 2)))
    d1 = math.sqrt(float(np.mean((f / scale0) ** 2)))
    h = min(cfg.max_step, (samples[-1] - samples[0]) / 10.0)
    if d1 > 0:
        h = min(h, 0.01 * max(d0, 1.0) / d1)
    h = max(h, cfg.min_step)
    err_prev = 1.0

    try:
        for target in samples[1:]:
            while s < target - 1e-14 * max(1.0, abs(target)):
                hs = min(h, target - s)
                k = [f]
                bad = None
                for i in range(1, 7):
                    zi = z + hs * sum(_A[i][j] * k[j] for j in range(i))
                    try:
                        k.append(rhs(s + _C[i] * hs, zi))
                    except (ArtifactError, ValueError, ZeroDivisionError) as e:
                        bad = e
                        break
                if bad is None:
                    z5 = z + hs * sum(_B5[j] * k[j] for j in range(6))
                    # k[6] is FSAL: evaluated at (s + hs, z5)
                    err_vec = hs * sum(_ERR[j] * k[j] for j in range(7))
                    scale = (cfg.abs_tol
                             + cfg.rel_tol * np.maximum(np.abs(z), np.abs(z5)))
                    err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))
                else:
                    err = None
                if err is None or not math.isfinite(err):
                    h = hs * 0.5
                    if h < cfg.min_step:
                        if bad is not None:
                            raise _SoftStop(DOMAIN_EXIT,
                                            f"at s={s:.6g}: {bad}")
                        raise _SoftStop(STEP_UNDERFLOW,
                                        f"non-finite error at s={s:.6g}")
                    continue
                if err <= 1.0:
                    s += hs
                    zold, fold = z, f
                    z, f = z5, k[6]
                    if renormalize_steps:
                        Fz = eval_F(metric, z[:n], z[n:2 * n])
                        z[n:2 * n] /= Fz
                        f = rhs(s, z)
                    if dense is not None:
                        dense.append((s - hs, hs, zold.copy(), fold.copy(),
                                      z.copy(), f.copy()))
                    if admissibility_tol is not None:
                        Fz = eval_F(metric, z[:n], z[n:2 * n])
                        if abs(Fz - F0) > admissibility_tol:
                            raise _SoftStop(
                                ADMISSIBILITY_LOST,
                                f"|F - F0| = {abs(Fz - F0):.3e} at s={s:.6g}")
                    fac = 0.9 * err ** -0.17 * err_prev ** 0.04
                    err_prev = max(err, 1e-10)
                    h = min(cfg.max_step, hs * min(5.0, max(0.2, fac)))
                else:
                    h = hs * max(0.2, 0.9 * err ** -0.2)
                if h < cfg.min_step:
                    raise _SoftStop(STEP_UNDERFLOW,
                                    f"h={h:.3e} < min_step at s={s:.6g}")
            out_z.append(z.copy())
    except _SoftStop as stop:
        status, detail = stop.status, stop.detail
    n_done = len(out_z)
    return np.array(samples[:n_done]), out_z, status, detail, dense


def _geodesic_rhs(metric):
    n = metric.dim

    def rhs(s, z):
        app = full_apparatus(metric, z[:n], z[n:])
        return np.concatenate([z[n:], -2.0 * app['G']])
    return rhs


def _biharmonic_rhs(metric):
    n = metric.dim

    def rhs(s, z):
        x, y, u, w = z[:n], z[n:2 * n], z[2 * n:3 * n], z[3 * n:]
        app = full_apparatus(metric, x, y)
        N, Cm = app['N'], app['C_mix']
        A = (-app['R_jac'] @ u
             + np.einsum('ijk,j,k->i', app['P_mix'], u, u)
             - np.einsum('ijk,j,k->i', Cm, u, w))
        return np.concatenate([
            y,
            u - N @ y,
            w - N @ u - np.einsum('ijk,j,k->i', Cm, u, u),
            A - N @ w - np.einsum('ijk,j,k->i', Cm, w, u),
        ])
    return rhs


def integrate_geodesic(metric, x0, y0, config=None, n_samples=201,
                       renormalize=False, unit_tol=1e-6):
    """Unit-speed geodesic flow dx/ds = y, dy/ds = -2G(x, y)."""
    cfg = config or IntegratorConfig()
    x0 = np.asarray(x0, float)
    y0 = np.asarray(y0, float)
    F0 = eval_F(metric, x0, y0)
    if abs(F0 - 1.0) > unit_tol:
        if not renormalize:
            raise InvalidParams(
                f"F(x0,y0) = {F0:.6g} is not unit; pass renormalize=True")
        y0 = y0 / F0
    n = metric.dim
    samples = np.linspace(cfg.s_span[0], cfg.s_span[1], n_samples)
    s, zs, status, detail, dense = _drive(_geodesic_rhs(metric),
                                          np.concatenate([x0, y0]),
                                          samples, cfg)
    states = [CurveState(x=z[:n], y=z[n:], u=np.zeros(n), w=np.zeros(n))
              for z in zs]
    traj = Trajectory(s=s, states=states, kind='geodesic', status=status,
                      detail=detail, dense=dense)
    traj.F_series = np.array([eval_F(metric, st.x, st.y) for st in states])
    rep = monitor_invariants(metric, traj)
    traj.kappa1_series = rep.kappa1_series
    traj.residual_series = rep.residual_series
    return traj


def make_biharmonic_initial(metric, x0, y0, kappa1, e2_hint, kappa2=0.0,
                            e3_hint=None, dependence_tol=1e-10):
    """Frenet-consistent initial state: u = k1 e2, w = -k1^2 e1 + k1 k2 e3.

    y0 is rescaled to unit F.  e2 comes from g-orthonormalizing e2_hint
    against e1 = y0; when k2 != 0, e3 comes from e3_hint or, failing
    that, from the first canonical basis vector that is independent of
    span{e1, e2}.
    """
    x0 = np.asarray(x0, float)
    y0 = np.asarray(y0, float)
    F0 = eval_F(metric, x0, y0)
    y0 = y0 / F0
    app = full_apparatus(metric, x0, y0)
    g = app['g']
    e1 = y0

    def orthonormalize(v, against):
        r = np.asarray(v, float).copy()
        for e in against:
            r -= float(e @ g @ r) * e
        rn = float(np.sqrt(max(r @ g @ r, 0.0)))
        if rn < dependence_tol * max(1.0, float(np.linalg.norm(v))):
            return None
        return r / rn

    e2 = orthonormalize(e2_hint, [e1])
    if e2 is None:
        raise DegenerateHint("e2_hint is g-parallel to y0")
    u = kappa1 * e2
    w = -kappa1 ** 2 * e1
    if kappa2 != 0.0:
        if metric.dim < 3:
            raise DimensionError("kappa2 != 0 needs chart dimension >= 3")
        e3 = None
        if e3_hint is not None:
            e3 = orthonormalize(e3_hint, [e1, e2])
            if e3 is None:
                raise DegenerateHint("e3_hint lies in span{e1, e2}")
        else:
            for idx in range(metric.dim):
                cand = np.zeros(metric.dim)
                cand[idx] = 1.0
                e3 = orthonormalize(cand, [e1, e2])
                if e3 is not None:
                    break
            if e3 is None:
                raise DegenerateHint("no canonical vector completes the frame")
        w = w + kappa1 * kappa2 * e3
    return CurveState(x=x0, y=y0, u=u, w=w)


def integrate_biharmonic(metric, state0, config=None, n_samples=201,
                         admissibility_tol=1e-4, renormalize_steps=False):
    """Biharmonic flow from a CurveState; returns (Trajectory, MonitorReport).

    The flow does not manifestly conserve F; the run stops flagged
    admissibility_lost once |F - F(0)| exceeds admissibility_tol.
    Per-step renormalization of y is available but off by default, so the
    integrated system stays the bare biharmonic equation.
    """
    cfg = config or IntegratorConfig()
    n = metric.dim
    samples = np.linspace(cfg.s_span[0], cfg.s_span[1], n_samples)
    s, zs, status, detail, dense = _drive(
        _biharmonic_rhs(metric), state0.pack(), samples, cfg, metric=metric,
        admissibility_tol=admissibility_tol,
        renormalize_steps=renormalize_steps, n=n)
    states = [CurveState.unpack(z, n) for z in zs]
    traj = Trajectory(s=s, states=states, kind='biharmonic', status=status,
                      detail=detail, dense=dense)
    traj.F_series = np.array([eval_F(metric, st.x, st.y) for st in states])
    rep = monitor_invariants(metric, traj)
    traj.kappa1_series = rep.kappa1_series
    traj.residual_series = rep.residual_series
    return traj, rep


def monitor_invariants(metric, trajectory):
    """Per-sample diagnostics: F-drift, kappa1, lambda = g.w, |tau2|.

    kappa1 on geodesic runs is the measured tension norm (velocity
    differenced over samples); on biharmonic runs it is |u|_g, and the
    bitension residual is recomputed with dw/ds from sample differencing,
    independently of the integrated right-hand side.
    """
    m = len(trajectory.states)
    nn = metric.dim
    kappa1 = np.zeros(m)
    lam = np.zeros((m, nn))
    resid = np.zeros(m)
    F_series = (trajectory.F_series if trajectory.F_series is not None
                else np.array([eval_F(metric, st.x, st.y)
                               for st in trajectory.states]))
    F_drift = float(np.max(np.abs(F_series - 1.0))) if m else 0.0
    can_diff = m >= 7
    if trajectory.kind == 'geodesic':
        if can_diff:
            h = float(trajectory.s[1] - trajectory.s[0])
            y_arr = trajectory.array('y')
            dyds = fd.grid_derivative(y_arr, h, order=1)
            for i, st in enumerate(trajectory.states):
                app = full_apparatus(metric, st.x, st.y)
                u_meas = dyds[i] + 2.0 * app['G']
                kappa1[i] = math.sqrt(max(float(u_meas @ app['g'] @ u_meas),
                                          0.0))
            resid = kappa1.copy()
        return MonitorReport(F_drift=F_drift, kappa1_series=kappa1,
                             lambda_series=lam, residual_series=resid)
    dwds = None
    if can_diff:
        h = float(trajectory.s[1] - trajectory.s[0])
        dwds = fd.grid_derivative(trajectory.array('w'), h, order=1)
    for i, st in enumerate(trajectory.states):
        app = full_apparatus(metric, st.x, st.y)
        kappa1[i] = math.sqrt(max(float(st.u @ app['g'] @ st.u), 0.0))
        lam[i] = app['g'] @ st.w
        if dwds is not None:
            resid[i] = _bitension_from_app(app, st, dwds[i]).norm_tau2
    return MonitorReport(F_drift=F_drift, kappa1_series=kappa1,
                         lambda_series=lam, residual_series=resid)
