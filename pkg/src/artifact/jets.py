"""Truncated multivariate Taylor (jet) arithmetic for tensor extraction.

A Jet carries the Taylor coefficients of a scalar quantity about a base
tangent sample (x, y), in the 2n chart variables (dx_1..dx_n, dy_1..dy_n),
truncated to total degree <= 4 with at most degree 2 in the x block.  One
evaluation of L = F^2 on seeded jets therefore yields every raw partial
the connection/curvature assembly needs, down to d^4L/dy^4 and
d^4L/dx^2 dy^2, in a single pass.

The truncation set is downward closed (every divisor of a retained
monomial is retained), so ring operations on the kept coefficients are
exact, not approximate.  Analytic functions of a jet are formed by Horner
composition of the degree-4 univariate Taylor polynomial with the
nilpotent part, which is again exact at this truncation order.

Sample:

>>> x = [Jet.variable(1, 'x', 0, 2.0)]
>>> y = [Jet.variable(1, 'y', 0, 3.0)]
>>> f = x[0] * y[0] ** 2
>>> f.val
18.0
>>> f.partial(x_idx=[0], y_idx=[0, 0])   # d^3 f / dx dy dy
2.0
"""
import itertools
import math

import numpy as np

_TOTAL_CAP = 4
_X_CAP = 2

_tables = {}


class _Table:
    """Monomial bookkeeping for one chart dimension, built once and cached."""

    def __init__(self, n):
        self.n = n
        nv = 2 * n
        exps = []
        for ex in itertools.product(range(_X_CAP + 1), repeat=n):
            if sum(ex) > _X_CAP:
                continue
            for ey in itertools.product(range(_TOTAL_CAP + 1), repeat=n):
                e = ex + ey
                if sum(e) <= _TOTAL_CAP:
                    exps.append(e)
        exps.sort(key=lambda e: (sum(e), e))
        self.exps = np.array(exps, dtype=np.int64)
        self.size = len(exps)
        assert exps[0] == (0,) * nv

        # base-5 encoding is collision-free: no exponent exceeds 4,
        # and products cannot carry because total degree stays <= 4
        enc = 5 ** np.arange(nv, dtype=np.int64)
        codes = self.exps @ enc
        self.code_to_idx = {int(c): i for i, c in enumerate(codes)}

        deg = self.exps.sum(axis=1)
        xdeg = self.exps[:, :n].sum(axis=1)
        ii, jj = np.nonzero((deg[:, None] + deg[None, :] <= _TOTAL_CAP)
                            & (xdeg[:, None] + xdeg[None, :] <= _X_CAP))
        kk = np.array([self.code_to_idx[int(c)]
                       for c in codes[ii] + codes[jj]], dtype=np.int64)
        self.mul_i, self.mul_j, self.mul_k = ii, jj, kk

        fact = np.ones(self.size)
        for i, e in enumerate(exps):
            for v in e:
                fact[i] *= math.factorial(v)
        self.fact = fact


def _table(n):
    if n not in _tables:
        _tables[n] = _Table(n)
    return _tables[n]


def _as_scalar(v):
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, (np.floating, np.integer)):
        return float(v)
    return None


class Jet:
    """One truncated Taylor polynomial; immutable by convention."""

    __slots__ = ('c', 'tab')
    __array_ufunc__ = None  # keep numpy from absorbing us into object arrays

    def __init__(self, c, tab):
        self.c = c
        self.tab = tab

    @classmethod
    def constant(cls, n, value):
        tab = _table(n)
        c = np.zeros(tab.size)
        c[0] = float(value)
        return cls(c, tab)

    @classmethod
    def variable(cls, n, block, index, value):
        """Seed jet for chart variable x_index (block='x') or y_index ('y')."""
        assert block in ('x', 'y')
        tab = _table(n)
        c = np.zeros(tab.size)
        c[0] = float(value)
        e = [0] * (2 * n)
        e[index if block == 'x' else n + index] = 1
        c[tab.code_to_idx[int(np.dot(e, 5 ** np.arange(2 * n)))]] = 1.0
        return cls(c, tab)

    @property
    def val(self):
        return self.c[0]

    def __float__(self):
        return float(self.c[0])

    def __repr__(self):
        return f"Jet(val={self.c[0]!r}, dim={self.tab.n})"

    # ---- ring operations -------------------------------------------------

    def __add__(self, other):
        s = _as_scalar(other)
        if s is not None:
            c = self.c.copy()
            c[0] += s
            return Jet(c, self.tab)
        if isinstance(other, Jet):
            return Jet(self.c + other.c, self.tab)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.tab)

    def __sub__(self, other):
        s = _as_scalar(other)
        if s is not None:
            c = self.c.copy()
            c[0] -= s
            return Jet(c, self.tab)
        if isinstance(other, Jet):
            return Jet(self.c - other.c, self.tab)
        return NotImplemented

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        s = _as_scalar(other)
        if s is not None:
            return Jet(self.c * s, self.tab)
        if isinstance(other, Jet):
            t = self.tab
            w = self.c[t.mul_i] * other.c[t.mul_j]
            return Jet(np.bincount(t.mul_k, weights=w, minlength=t.size), t)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        s = _as_scalar(other)
        if s is not None:
            return Jet(self.c / s, self.tab)
        if isinstance(other, Jet):
            return self * other._reciprocal()
        return NotImplemented

    def __rtruediv__(self, other):
        s = _as_scalar(other)
        if s is None:
            return NotImplemented
        return self._reciprocal() * s

    def __pow__(self, p):
        if isinstance(p, float) and p == int(p) and abs(p) <= 8:
            p = int(p)
        if isinstance(p, (int, np.integer)):
            p = int(p)
            if p < 0:
                return self._reciprocal() ** (-p)
            if p == 0:
                return Jet.constant(self.tab.n, 1.0)
            r = self
            for _ in range(p - 1):
                r = r * self
            return r
        v = self.c[0]
        if v <= 0.0:
            raise ValueError("fractional power of a non-positive jet value")
        d = [v ** p]
        fac = 1.0
        for k in range(1, 5):
            fac *= p - (k - 1)
            d.append(fac * v ** (p - k))
        return self._compose(d)

    # ---- comparisons act on the value part only --------------------------

    def _cmp_key(self, other):
        s = _as_scalar(other)
        if s is not None:
            return s
        if isinstance(other, Jet):
            return other.c[0]
        return NotImplemented

    def __lt__(self, other):
        k = self._cmp_key(other)
        return NotImplemented if k is NotImplemented else self.c[0] < k

    def __le__(self, other):
        k = self._cmp_key(other)
        return NotImplemented if k is NotImplemented else self.c[0] <= k

    def __gt__(self, other):
        k = self._cmp_key(other)
        return NotImplemented if k is NotImplemented else self.c[0] > k

    def __ge__(self, other):
        k = self._cmp_key(other)
        return NotImplemented if k is NotImplemented else self.c[0] >= k

    # ---- analytic functions ----------------------------------------------

    def _compose(self, derivs):
        """Taylor-compose f with this jet; derivs = [f(a), f'(a), ..., f''''(a)]."""
        z = Jet(self.c.copy(), self.tab)
        z.c = z.c.copy()
        z.c[0] = 0.0
        acc = Jet.constant(self.tab.n, derivs[4] / 24.0)
        for k, kfac in ((3, 6.0), (2, 2.0), (1, 1.0), (0, 1.0)):
            acc = acc * z
            acc.c[0] += derivs[k] / kfac
        return acc

    def _reciprocal(self):
        v = self.c[0]
        if v == 0.0:
            raise ZeroDivisionError("reciprocal of a jet with zero value")
        return self._compose([1.0 / v, -1.0 / v ** 2, 2.0 / v ** 3,
                              -6.0 / v ** 4, 24.0 / v ** 5])

    def sqrt(self):
        v = self.c[0]
        if v <= 0.0:
            raise ValueError("sqrt of a non-positive jet value")
        s = math.sqrt(v)
        return self._compose([s, 0.5 / s, -0.25 / (s * v), 0.375 / (s * v * v),
                              -0.9375 / (s * v ** 3)])

    def exp(self):
        e = math.exp(self.c[0])
        return self._compose([e, e, e, e, e])

    def log(self):
        v = self.c[0]
        if v <= 0.0:
            raise ValueError("log of a non-positive jet value")
        return self._compose([math.log(v), 1.0 / v, -1.0 / v ** 2,
                              2.0 / v ** 3, -6.0 / v ** 4])

    def sin(self):
        s, c = math.sin(self.c[0]), math.cos(self.c[0])
        return self._compose([s, c, -s, -c, s])

    def cos(self):
        s, c = math.sin(self.c[0]), math.cos(self.c[0])
        return self._compose([c, -s, -c, s, c])

    def atan(self):
        v = self.c[0]
        q = 1.0 + v * v
        return self._compose([math.atan(v), 1.0 / q, -2.0 * v / q ** 2,
                              (6.0 * v * v - 2.0) / q ** 3,
                              24.0 * v * (1.0 - v * v) / q ** 4])

    # ---- extraction ------------------------------------------------------

    def partial(self, x_idx=(), y_idx=()):
        """One mixed partial d^|x_idx|+|y_idx| / dx... dy..., by index lists."""
        n = self.tab.n
        e = [0] * (2 * n)
        for a in x_idx:
            e[a] += 1
        for i in y_idx:
            e[n + i] += 1
        pos = self.tab.code_to_idx.get(int(np.dot(e, 5 ** np.arange(2 * n))))
        if pos is None:
            raise ValueError("partial beyond the truncation caps")
        return self.c[pos] * self.tab.fact[pos]


# analytic shims usable on jets and plain floats alike, so a single metric
# definition serves both the jet route and the finite-difference oracle

def _dispatch(name, mathfn):
    def fn(v):
        if isinstance(v, Jet):
            return getattr(v, name)()
        return mathfn(v)
    fn.__name__ = name
    return fn


sqrt = _dispatch('sqrt', math.sqrt)
exp = _dispatch('exp', math.exp)
log = _dispatch('log', math.log)
sin = _dispatch('sin', math.sin)
cos = _dispatch('cos', math.cos)
atan = _dispatch('atan', math.atan)


def _fill_tensor(c, tab, px, py):
    """Dense symmetric partial tensor with x axes first, then y axes."""
    n = tab.n
    enc = 5 ** np.arange(2 * n, dtype=np.int64)
    out = np.zeros((n,) * (px + py))
    for xc in itertools.combinations_with_replacement(range(n), px):
        for yc in itertools.combinations_with_replacement(range(n), py):
            e = [0] * (2 * n)
            for a in xc:
                e[a] += 1
            for i in yc:
                e[n + i] += 1
            pos = tab.code_to_idx[int(np.dot(e, enc))]
            val = c[pos] * tab.fact[pos]
            for xp in set(itertools.permutations(xc)):
                for yp in set(itertools.permutations(yc)):
                    out[xp + yp] = val
    return out


_RAW_LAYOUT = {
    'L': (0, 0), 'Lx': (1, 0), 'Ly': (0, 1),
    'Lxx': (2, 0), 'Lxy': (1, 1), 'Lyy': (0, 2),
    'Lxxy': (2, 1), 'Lxyy': (1, 2), 'Lyyy': (0, 3),
    'Lxxyy': (2, 2), 'Lxyyy': (1, 3), 'Lyyyy': (0, 4),
}


def raw_partials_jet(L, x, y):
    """All raw partial arrays of L(x, y) needed by the tensor assembly.

    L must accept sequences of jet scalars.  Keys and index layouts match
    the finite-difference backend exactly: x axes come first, e.g.
    Lxyy[a, i, j] = d^3 L / dx^a dy^i dy^j.
    """
    n = len(x)
    xs = [Jet.variable(n, 'x', i, x[i]) for i in range(n)]
    ys = [Jet.variable(n, 'y', i, y[i]) for i in range(n)]
    val = L(xs, ys)
    if not isinstance(val, Jet):
        val = Jet.constant(n, val)
    tab = val.tab
    out = {}
    for key, (px, py) in _RAW_LAYOUT.items():
        if px + py == 0:
            out[key] = val.c[0]
        else:
            t = _fill_tensor(val.c, tab, px, py)
            out[key] = t
    return out
