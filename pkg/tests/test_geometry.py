"""Connection and curvature tensors against closed forms and FD oracles.

The oracles here are deliberately primitive: central differences of the
metric matrix assembled into Christoffel symbols and a sectional
curvature by explicit loops.  They share no code with the package's
assembly, so agreement is evidence, not bookkeeping.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact import (
    DegenerateFlag,
    DegenerateTangent,
    DimensionError,
    DomainError,
    InvalidParams,
    NotPositiveDefinite,
    TangentSample,
    builtin,
    c_tilde,
    cartan_tensor,
    curvature_data,
    eval_F,
    f_operator,
    flag_curvature,
    full_apparatus,
    metric_tensor,
    spray_and_connection,
)


# ---- independent oracles -------------------------------------------------

def a_sphere(x):
    # stereographic chart of the unit sphere; constant curvature +1
    w = 1.0 + x[0] * x[0] + x[1] * x[1]
    f = 4.0 / (w * w)
    return [[f, 0.0], [0.0, f]]


def christoffel_fd(a_fn, x, hx=1e-5):
    """Levi-Civita symbols of a matrix field by central differences."""
    x = np.asarray(x, float)
    n = x.size

    def a_at(z):
        return np.asarray(a_fn(list(z)), float)

    da = np.zeros((n, n, n))        # da[k] = d a / dx^k
    for k in range(n):
        xp = x.copy()
        xp[k] += hx
        xm = x.copy()
        xm[k] -= hx
        da[k] = (a_at(xp) - a_at(xm)) / (2.0 * hx)
    ainv = np.linalg.inv(a_at(x))
    gamma = np.zeros((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                s = 0.0
                for l in range(n):
                    s += ainv[i, l] * (da[j][l, k] + da[k][l, j] - da[l][j, k])
                gamma[i, j, k] = 0.5 * s
    return gamma


def sectional_fd(a_fn, x, hx=1e-5):
    """Gauss curvature of a 2D matrix field, one more FD layer up."""
    x = np.asarray(x, float)
    n = x.size
    dG = np.zeros((n, n, n, n))
    for k in range(n):
        xp = x.copy()
        xp[k] += hx
        xm = x.copy()
        xm[k] -= hx
        dG[k] = (christoffel_fd(a_fn, xp, hx)
                 - christoffel_fd(a_fn, xm, hx)) / (2.0 * hx)
    G = christoffel_fd(a_fn, x, hx)
    R = np.zeros((n, n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    s = dG[k][i, j, l] - dG[l][i, j, k]
                    for h in range(n):
                        s += G[i, h, k] * G[h, j, l] - G[i, h, l] * G[h, j, k]
                    R[i, j, k, l] = s
    a = np.asarray(a_fn(list(x)), float)
    rlow = np.einsum('ih,hjkl->ijkl', a, R)
    return rlow[0, 1, 0, 1] / (a[0, 0] * a[1, 1] - a[0, 1] ** 2)


def random_randers(rng, n):
    """SPD matrix near the identity plus a small drift one-form."""
    B = rng.normal(size=(n, n)) * 0.15
    a = np.eye(n) + 0.5 * (B + B.T) + n * 0.05 * np.eye(n)
    b0 = rng.normal(size=n)
    b0 *= 0.25 / max(1.0, np.linalg.norm(b0))
    return builtin('randers', {'a': a, 'b0': b0})


# ---- trivial closed forms ------------------------------------------------

def test_euclidean_point_values():
    m = builtin('euclidean', {'n': 3})
    x = np.zeros(3)
    y = np.array([3.0, 0.0, 4.0])
    assert eval_F(m, x, y) == pytest.approx(5.0, abs=1e-14)
    g, ginv = metric_tensor(m, x, y)
    assert np.allclose(g, np.eye(3), atol=1e-12)
    assert np.allclose(ginv, np.eye(3), atol=1e-12)
    C_low, _ = cartan_tensor(m, x, y)
    assert np.max(np.abs(C_low)) < 1e-12
    pg = spray_and_connection(m, x, y)
    assert np.max(np.abs(pg.G)) < 1e-12
    assert np.max(np.abs(pg.N)) < 1e-12


def test_mink3_frozen_values():
    m = builtin('mink3', {'b': 0.5})
    x = np.zeros(3)
    assert eval_F(m, x, [0.0, 0.0, 1.0]) == pytest.approx(1.5, abs=1e-14)
    g, _ = metric_tensor(m, x, [0.0, 0.0, 1.0])
    assert np.allclose(g, np.diag([1.5, 1.5, 2.25]), atol=1e-12)

    y = np.array([0.0, 1.0, 1.0])
    C_low, _ = cartan_tensor(m, x, y)
    assert C_low[2, 2, 2] == pytest.approx(3.0 / (16.0 * np.sqrt(2.0)),
                                           abs=1e-12)
    # position-independent norm: every horizontal quantity vanishes
    app = full_apparatus(m, x, y)
    for key in ('G', 'N', 'Gamma', 'R3', 'P_mix'):
        assert np.max(np.abs(app[key])) < 1e-12, key


def test_disk_metric_frozen_values_at_center():
    m = builtin('numata_disk')
    x = np.zeros(2)
    y = np.array([1.0, 0.0])
    app = full_apparatus(m, x, y)
    assert app['F'] == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(app['G'], [0.5, 0.0], atol=1e-10)
    X = np.array([0.0, 1.0])
    assert float(X @ app['g'] @ (app['R_jac'] @ X)) == pytest.approx(
        0.75, abs=1e-9)
    assert flag_curvature(m, x, y, X) == pytest.approx(0.75, abs=1e-9)


def test_disk_metric_generic_identities():
    # the spray is proportional to y and the connection-level tensors
    # satisfy closed forms in alpha = |y| and F
    m = builtin('numata_disk')
    x = np.array([0.31, -0.22])
    y = np.array([0.53, 0.41])
    app = full_apparatus(m, x, y)
    alpha2 = float(y @ y)
    F = app['F']
    assert np.allclose(app['G'], (alpha2 / (2.0 * F)) * y, atol=1e-9)
    assert np.allclose(app['P_mix'], -(alpha2 / (2.0 * F)) * app['C_mix'],
                       atol=1e-8)
    X = np.array([-0.2, 0.9])
    assert flag_curvature(m, x, y, X) == pytest.approx(
        3.0 * alpha2 ** 2 / (4.0 * F ** 4), rel=1e-7)


# ---- structural identities across the pool -------------------------------

POOL = [
    builtin('euclidean', {'n': 2}),
    builtin('mink3', {'b': 0.4}),
    builtin('numata_disk'),
    random_randers(np.random.default_rng(7), 3),
]
SAMPLES = {
    2: (np.array([0.21, -0.34]), np.array([0.8, -0.55])),
    3: (np.array([0.21, -0.34, 0.12]), np.array([0.8, -0.55, 0.3])),
}


@pytest.mark.parametrize('metric', POOL, ids=lambda m: m.label)
@pytest.mark.parametrize('lam', [0.5, 2.0, 7.0])
def test_homogeneity_in_y(metric, lam):
    x, y = SAMPLES[metric.dim]
    a0 = full_apparatus(metric, x, y)
    a1 = full_apparatus(metric, x, lam * y)
    assert a1['F'] == pytest.approx(lam * a0['F'], rel=1e-12)
    assert np.allclose(a1['g'], a0['g'], atol=1e-9)
    assert np.allclose(a1['C_low'], a0['C_low'] / lam, atol=1e-9)
    assert np.allclose(a1['G'], lam ** 2 * a0['G'], atol=1e-9 * lam ** 2)
    assert np.allclose(a1['N'], lam * a0['N'], atol=1e-9 * lam)


@pytest.mark.parametrize('metric', POOL, ids=lambda m: m.label)
def test_cartan_symmetry_and_annihilation(metric):
    x, y = SAMPLES[metric.dim]
    app = full_apparatus(metric, x, y)
    C = app['C_low']
    for perm in ((0, 2, 1), (1, 0, 2), (2, 1, 0)):
        assert np.max(np.abs(C - C.transpose(perm))) < 1e-9
    assert np.max(np.abs(np.einsum('ijk,k->ij', C, y))) < 1e-9
    P = app['P_low']
    for perm in ((0, 2, 1), (1, 0, 2), (2, 1, 0)):
        assert np.max(np.abs(P - P.transpose(perm))) < 1e-8
    assert np.max(np.abs(np.einsum('ijk,k->ij', P, y))) < 1e-8


@pytest.mark.parametrize('metric', POOL, ids=lambda m: m.label)
def test_jacobi_operator_self_adjoint_and_kills_y(metric):
    x, y = SAMPLES[metric.dim]
    app = full_apparatus(metric, x, y)
    gr = app['g'] @ app['R_jac']
    assert np.max(np.abs(gr - gr.T)) < 1e-8
    assert np.max(np.abs(app['R_jac'] @ y)) < 1e-8


@pytest.mark.parametrize('metric', POOL, ids=lambda m: m.label)
def test_connection_is_metric_compatible(metric):
    # horizontal derivative of g equals the two-slot contraction with the
    # connection symbols, the defining property used everywhere downstream
    x, y = SAMPLES[metric.dim]
    app = full_apparatus(metric, x, y)
    g, gamma, dg = app['g'], app['Gamma'], app['delta_g']
    lhs = dg                              # [k, h, j]
    rhs = (np.einsum('ihk,ij->khj', gamma, g)
           + np.einsum('ijk,hi->khj', gamma, g))
    assert np.max(np.abs(lhs - rhs)) < 1e-8


@given(y0=st.floats(-2, 2), y1=st.floats(-2, 2), y2=st.floats(0.3, 2),
       lam=st.floats(0.3, 4))
@settings(max_examples=40, deadline=None)
def test_norm_homogeneity_property(y0, y1, y2, lam):
    m = builtin('mink3', {'b': 0.6})
    y = np.array([y0, y1, y2])
    x = np.zeros(3)
    assert eval_F(m, x, lam * y) == pytest.approx(lam * eval_F(m, x, y),
                                                  rel=1e-12)


# ---- Riemannian reductions and FD cross-checks ---------------------------

SPHERE = builtin('riemannian', {'matrix_fn': a_sphere, 'dim': 2})


def test_sphere_chart_tensors_reduce():
    x = np.array([0.3, -0.1])
    y = np.array([0.7, 0.4])
    app = full_apparatus(SPHERE, x, y)
    assert np.max(np.abs(app['C_low'])) < 1e-10
    assert np.max(np.abs(app['P_mix'])) < 1e-10
    assert np.max(np.abs(app['Ctilde4'])) < 1e-10


def test_sphere_chart_connection_matches_fd_christoffel():
    x = np.array([0.3, -0.1])
    y = np.array([0.7, 0.4])
    app = full_apparatus(SPHERE, x, y)
    gamma_fd = christoffel_fd(a_sphere, x)
    assert np.max(np.abs(app['Gamma'] - gamma_fd)) < 1e-6


def test_sphere_chart_flag_curvature_is_one():
    for x in ([0.0, 0.0], [0.3, -0.1], [-0.5, 0.45]):
        k_fd = sectional_fd(a_sphere, np.asarray(x))
        assert k_fd == pytest.approx(1.0, abs=1e-5)
        got = flag_curvature(SPHERE, x, [0.7, 0.4], [-0.3, 0.8])
        assert got == pytest.approx(k_fd, abs=1e-5)


def test_f_operator_riemannian_closed_form():
    # with no Cartan content the quartic form collapses to -K * sigma,
    # sigma the squared area of the (y, X) parallelogram
    x = np.array([0.3, -0.1])
    y = np.array([0.7, 0.4])
    X = np.array([-0.2, 0.9])
    a = np.asarray(a_sphere(x), float)
    k_fd = sectional_fd(a_sphere, x)
    sigma = float((y @ a @ y) * (X @ a @ X) - (y @ a @ X) ** 2)
    got = f_operator(SPHERE, x, y, X)
    assert got == pytest.approx(-k_fd * sigma, rel=1e-5)


def test_c_tilde_against_frozen_fd_value():
    # golden numbers from a three-layer central-difference stack over the
    # squared norm, h = 1e-3, computed once and pinned here
    m = builtin('mink3', {'b': 0.5})
    golden = np.array([0.0, 0.10327054368418323, -0.0031103522741774])
    got = c_tilde(m, np.zeros(3), [0.0, 1.0, 1.0],
                  [0.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 1.0, 0.0])
    assert np.max(np.abs(got - golden)) < 5e-5


def test_backend_agreement_on_random_randers():
    rng = np.random.default_rng(11)
    m = random_randers(rng, 2)
    x = np.array([0.15, -0.3])
    y = np.array([0.9, 0.35])
    jet = full_apparatus(m, x, y, backend='jet')
    fd = full_apparatus(m, x, y, backend='fd')
    for key in ('F', 'g', 'C_low', 'G', 'N', 'R3', 'P_mix'):
        a = np.asarray(jet[key])
        b = np.asarray(fd[key])
        scale = max(1.0, np.max(np.abs(a)))
        assert np.max(np.abs(a - b)) / scale < 1e-6, key


# ---- argument validation -------------------------------------------------

def test_tangent_sample_call_form():
    m = builtin('mink3', {'b': 0.5})
    x = np.array([0.1, 0.2, 0.3])
    y = np.array([0.4, -0.2, 0.9])
    a0 = full_apparatus(m, x, y)
    a1 = full_apparatus(m, TangentSample(x=x, y=y))
    assert np.allclose(a0['g'], a1['g'], atol=0)


def test_degenerate_tangent_rejected():
    m = builtin('euclidean', {'n': 2})
    with pytest.raises(DegenerateTangent):
        full_apparatus(m, np.zeros(2), np.zeros(2))


def test_dimension_mismatch_rejected():
    m = builtin('euclidean', {'n': 2})
    with pytest.raises(DimensionError):
        full_apparatus(m, np.zeros(3), np.ones(3))


def test_domain_exit_rejected():
    m = builtin('numata_disk')
    with pytest.raises(DomainError):
        full_apparatus(m, np.array([1.2, 0.0]), np.array([1.0, 0.0]))


def test_degenerate_flag_rejected():
    m = builtin('euclidean', {'n': 2})
    with pytest.raises(DegenerateFlag):
        flag_curvature(m, np.zeros(2), [1.0, 0.0], [2.0, 0.0])


def test_non_spd_riemannian_rejected():
    with pytest.raises(InvalidParams):
        builtin('riemannian', {'matrix': np.array([[1.0, 2.0], [2.0, 1.0]])})


def test_indefinite_norm_rejected_at_sample():
    # a hand-rolled quadratic form with signature (+, -): F^2 > 0 can hold
    # on a cone while the fundamental tensor is still indefinite
    from artifact import MetricSpec
    from artifact.jets import sqrt as jsqrt

    def F(x, y):
        return jsqrt(y[0] * y[0] - 0.5 * y[1] * y[1])

    bad = MetricSpec(dim=2, F=F, label='indefinite')
    with pytest.raises(NotPositiveDefinite):
        full_apparatus(bad, np.zeros(2), np.array([1.0, 0.2]))


def test_unknown_builtin_rejected():
    with pytest.raises(InvalidParams):
        builtin('lorentzian')
