"""Graded panel quadrature on the geodesic half-line and radial grid functions.

A :class:`RadialGrid` splits ``[0, T_max]`` into panels: one origin panel
``[0, t_min]``, a run of geometrically graded panels up to a core radius, and
uniform panels beyond.  Each panel carries ``order`` Gauss-Legendre nodes;
these nodes are the sampling points of :class:`RadialFn`, which interpolates
by the degree ``order - 1`` polynomial through a panel's nodes.

Weighted integrals ``omega_{N-1} int t^gamma f(t) sinh^{N-1}(t) dt`` use the
Legendre nodes on every panel except the origin panel, where a Gauss-Jacobi
rule absorbs the combined power ``t^(gamma + N - 1)`` exactly.
"""

import csv
import warnings
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy import sparse
from scipy.special import roots_jacobi

from .errors import GridError, IntegrabilityError, TailWarning
from .geometry import sphere_area

TAIL_FLOOR = 1e-8
CSV_SCHEMA = "# schema=1"


@dataclass(frozen=True)
class Grading:
    """Node-distribution law.

    kind     ``"geometric"`` (default) or ``"uniform"``
    ratio    geometric ratio between consecutive graded panels
    layers   number of graded panels; ``None`` picks ``min(40, (P-1)//3)``
    order    Gauss-Legendre nodes per panel
    core     radius where grading stops; ``None`` means ``min(1, T_max/4)``
    """

    kind: str = "geometric"
    ratio: float = 0.5
    layers: int = None
    order: int = 8
    core: float = None

    @classmethod
    def parse(cls, spec):
        """Parse ``"geometric:ratio=0.5,layers=40,order=8"``-style descriptors."""
        if spec is None or isinstance(spec, Grading):
            return spec or cls()
        kind, _, rest = str(spec).partition(":")
        kw = {"kind": kind.strip() or "geometric"}
        for item in filter(None, (s.strip() for s in rest.split(","))):
            key, _, val = item.partition("=")
            key = key.strip()
            if key in ("layers", "order"):
                kw[key] = int(val)
            elif key in ("ratio", "core"):
                kw[key] = float(val)
            else:
                raise GridError(f"unknown grading option {key!r}")
        return cls(**kw)

    def describe(self):
        parts = [f"ratio={self.ratio}", f"order={self.order}"]
        if self.layers is not None:
            parts.append(f"layers={self.layers}")
        if self.core is not None:
            parts.append(f"core={self.core}")
        return f"{self.kind}:" + ",".join(parts)


@lru_cache(maxsize=None)
def _reference(m):
    x, w = npleg.leggauss(m)
    V = npleg.legvander(x, m - 1)
    Vinv = np.linalg.inv(V)
    dcoef = np.zeros((m, m))
    for k in range(m):
        e = np.zeros(m)
        e[k] = 1.0
        d = npleg.legder(e)
        dcoef[: d.size, k] = d
    Dref = V @ dcoef @ Vinv
    return x, w, Vinv, dcoef, Dref


@lru_cache(maxsize=None)
def _jacobi(m, s):
    x, w = roots_jacobi(m, 0.0, s)
    return x, w


class RadialGrid:
    """Immutable panel grid on ``[0, T_max]``; see module docstring."""

    def __init__(self, edges, order, grading=None):
        edges = np.asarray(edges, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or edges[0] != 0.0:
            raise GridError("edges must start at 0 and hold at least one panel")
        if np.any(np.diff(edges) <= 0):
            raise GridError("edges must be strictly increasing")
        self.edges = edges
        self.order = int(order)
        self.P = edges.size - 1
        self.T_max = float(edges[-1])
        self.grading = grading
        x, w, _, _, _ = _reference(self.order)
        h = np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        self.h = h
        self.nodes = (mid[:, None] + 0.5 * h[:, None] * x[None, :]).ravel()
        self.weights = (0.5 * h[:, None] * w[None, :]).ravel()
        self.n = self.nodes.size
        self._cache = {}
        for arr in (self.edges, self.h, self.nodes, self.weights):
            arr.setflags(write=False)

    def __repr__(self):
        return f"RadialGrid(n={self.n}, P={self.P}, T_max={self.T_max}, order={self.order})"

    # -- plain quadrature and interpolation ---------------------------------
    def integrate(self, f):
        """Unweighted ``int_0^T_max f(t) dt``."""
        vals = f(self.nodes) if callable(f) else np.asarray(f)
        return float(np.dot(self.weights, vals))

    def panel_of(self, t):
        t = np.asarray(t, dtype=float)
        j = np.searchsorted(self.edges, t, side="right") - 1
        return np.clip(j, 0, self.P - 1)

    def interp_matrix(self, t, panel, deriv=False):
        """Rows evaluate the panel polynomial (or its t-derivative) at ``t``."""
        m = self.order
        _, _, Vinv, dcoef, _ = _reference(m)
        a = self.edges[panel]
        h = self.h[panel]
        xi = 2.0 * (np.asarray(t) - a) / h - 1.0
        L = npleg.legvander(xi, m - 1)
        if deriv:
            return (L @ dcoef @ Vinv) * (2.0 / h)[..., None]
        return L @ Vinv

    def interpolate(self, values, t, deriv=False):
        values = np.asarray(values, dtype=float)
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        j = self.panel_of(flat)
        M = self.interp_matrix(flat, j, deriv=deriv)
        local = values.reshape(self.P, self.order)[j]
        out = np.einsum("ij,ij->i", M, local)
        return out.reshape(t.shape)

    def derivative(self, values):
        """Derivative of the per-panel interpolant at the nodes."""
        Dref = _reference(self.order)[4]
        v = np.asarray(values, dtype=float).reshape(self.P, self.order)
        return ((v @ Dref.T) * (2.0 / self.h)[:, None]).ravel()

    # -- singular-endpoint rules --------------------------------------------
    def power_rule(self, s):
        """Rule for ``int_0^T_max t^s g(t) dt`` with ``s > -1``.

        Returns ``(nodes, weights, sample)`` where ``sample(v)`` maps node values
        (length ``n``) to values at the rule's nodes.  Only the origin panel
        departs from the Legendre nodes.
        """
        key = ("power", float(s))
        if key in self._cache:
            return self._cache[key]
        if not s > -1.0:
            raise IntegrabilityError(f"power t^{s} is not integrable at 0")
        m = self.order
        mj = m + 2
        xj, wj = _jacobi(mj, float(s))
        h0 = self.h[0]
        tj = 0.5 * h0 * (1.0 + xj)
        wj = wj * (0.5 * h0) ** (s + 1.0)
        I0 = self.interp_matrix(tj, np.zeros(mj, dtype=int))
        rest = self.nodes[m:]
        nodes = np.concatenate([tj, rest])
        weights = np.concatenate([wj, self.weights[m:] * rest**s])
        S = sparse.block_diag([sparse.csr_matrix(I0), sparse.identity(self.n - m)], format="csr")

        def sample(v, _I0=I0, _m=m):
            v = np.asarray(v, dtype=float)
            return np.concatenate([_I0 @ v[:_m], v[_m:]])

        rule = PowerRule(nodes, weights, sample, S)
        self._cache[key] = rule
        return rule

    def weighted_rule(self, gamma, N):
        """Rule for ``omega_{N-1} int t^gamma f sinh^{N-1} t dt`` (weights include everything)."""
        key = ("weighted", float(gamma), int(N))
        if key in self._cache:
            return self._cache[key]
        if not gamma + N > 0:
            raise IntegrabilityError(f"t^{gamma} sinh^{N - 1}(t) is not integrable at 0 (gamma <= -N)")
        if self.T_max * (N - 1) > 700.0:
            raise GridError("T_max too large for sinh^(N-1) in double precision")
        base = self.power_rule(gamma + N - 1)
        t = base.nodes
        shape = np.ones_like(t)
        pos = t > 0
        shape[pos] = (np.sinh(t[pos]) / t[pos]) ** (N - 1)
        rule = PowerRule(t, base.weights * shape * sphere_area(N), base.sample, base.S)
        self._cache[key] = rule
        return rule

    # -- export ----------------------------------------------------------------
    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(CSV_SCHEMA + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "weight"])
            for t, wt in zip(self.nodes, self.weights):
                w.writerow([repr(float(t)), repr(float(wt))])


@dataclass(frozen=True)
class PowerRule:
    nodes: np.ndarray
    weights: np.ndarray
    sample: object
    S: object


def build_grid(n, T_max, grading=None):
    """Composite Gauss-Legendre grid with about ``n`` nodes on ``[0, T_max]``.

    The node count is rounded down to a multiple of ``grading.order``.
    """
    grading = Grading.parse(grading)
    if n < 16:
        raise GridError("n must be at least 16")
    if not T_max > 0:
        raise GridError("T_max must be positive")
    m = grading.order
    if m < 2:
        raise GridError("order must be >= 2")
    P = n // m
    if P < 2:
        raise GridError(f"n = {n} gives fewer than two panels at order {m}")
    if grading.kind == "uniform":
        edges = np.linspace(0.0, T_max, P + 1)
    elif grading.kind == "geometric":
        if not 0.0 < grading.ratio < 1.0:
            raise GridError("geometric ratio must lie in (0, 1)")
        core = grading.core if grading.core is not None else min(1.0, 0.25 * T_max)
        if not 0.0 < core < T_max:
            raise GridError("core radius must lie in (0, T_max)")
        L = grading.layers if grading.layers is not None else min(40, (P - 1) // 3)
        if L < 0 or L > P - 2:
            raise GridError(f"{L} graded layers do not fit in {P} panels")
        graded = core * grading.ratio ** np.arange(L, -1, -1, dtype=float)
        U = P - 1 - L
        uniform = np.linspace(core, T_max, U + 1)[1:]
        edges = np.concatenate([[0.0], graded, uniform])
    else:
        raise GridError(f"unknown grading kind {grading.kind!r}")
    return RadialGrid(edges, m, grading)


def integrate_weighted(f, gamma, grid, N, *, check_tail=True):
    """``omega_{N-1} int_0^T_max t^gamma f(t) sinh^{N-1}(t) dt``.

    ``f`` may be a :class:`RadialFn`, a callable, or an array of node values.
    Emits :class:`TailWarning` when the weighted integrand at the last node
    is not small against the integral.
    """
    rule = grid.weighted_rule(gamma, N)
    if isinstance(f, RadialFn):
        vals = rule.sample(f.values)
        check_tail = check_tail and not f.bounded
    elif callable(f):
        vals = np.asarray(f(rule.nodes), dtype=float)
    else:
        vals = rule.sample(f)
    total = float(np.dot(rule.weights, vals))
    if check_tail:
        tail_check(rule, vals, total, grid)
    return total


def tail_check(rule, integrand_vals, total, grid, floor=TAIL_FLOOR):
    # weighted integrand at the last node, times the last panel width
    tail = abs(integrand_vals[-1] * rule.weights[-1] / grid.weights[-1]) * grid.h[-1]
    if tail > floor * max(abs(total), 1e-300):
        warnings.warn(
            f"integrand not negligible at T_max={grid.T_max:g} (tail/total = {tail / max(abs(total), 1e-300):.2e})",
            TailWarning,
            stacklevel=3,
        )
        return False
    return True


class RadialFn:
    """Radial function on 𝔹^N sampled at the nodes of a :class:`RadialGrid`.

    ``derivs`` holds ``du/dt`` at the nodes; when omitted it is taken from the
    per-panel interpolant.  ``bounded=True`` marks a function living on the
    geodesic ball ``[0, T_max]`` (Dirichlet data), which switches off the
    truncation-tail diagnostics.
    """

    __slots__ = ("grid", "values", "derivs", "N", "bounded")

    def __init__(self, grid, values, derivs=None, N=3, bounded=False):
        values = np.array(values, dtype=float)
        if values.shape != (grid.n,):
            raise GridError(f"expected {grid.n} node values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise GridError("RadialFn values must be finite")
        derivs = grid.derivative(values) if derivs is None else np.array(derivs, dtype=float)
        values.setflags(write=False)
        derivs.setflags(write=False)
        self.grid = grid
        self.values = values
        self.derivs = derivs
        self.N = int(N)
        self.bounded = bool(bounded)

    @classmethod
    def from_callable(cls, grid, f, df=None, N=3, bounded=False):
        vals = f(grid.nodes)
        der = None if df is None else df(grid.nodes)
        return cls(grid, vals, der, N=N, bounded=bounded)

    def __repr__(self):
        return f"RadialFn(n={self.grid.n}, N={self.N}, bounded={self.bounded})"

    def _like(self, values, derivs):
        return RadialFn(self.grid, values, derivs, N=self.N, bounded=self.bounded)

    def __mul__(self, c):
        c = float(c)
        return self._like(c * self.values, c * self.derivs)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __add__(self, other):
        self._check_same(other)
        return self._like(self.values + other.values, self.derivs + other.derivs)

    def __sub__(self, other):
        self._check_same(other)
        return self._like(self.values - other.values, self.derivs - other.derivs)

    def _check_same(self, other):
        if not isinstance(other, RadialFn) or other.grid is not self.grid:
            raise GridError("RadialFn arithmetic needs a shared grid")

    def abs(self):
        return self._like(np.abs(self.values), np.sign(self.values) * self.derivs)

    def eval(self, t):
        return self.grid.interpolate(self.values, t)

    def deriv_at(self, t):
        return self.grid.interpolate(self.derivs, t)

    def with_bounded(self, bounded=True):
        return RadialFn(self.grid, self.values, self.derivs, N=self.N, bounded=bounded)

    # -- CSV ---------------------------------------------------------------
    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(CSV_SCHEMA + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "u"])
            for t, u in zip(self.grid.nodes, self.values):
                w.writerow([repr(float(t)), repr(float(u))])

    @classmethod
    def from_csv(cls, path, grid, N=3, bounded=False):
        """Load a ``t,u`` profile onto ``grid``; re-interpolated unless the nodes match."""
        t, u = read_profile_csv(path)
        if t.size == grid.n and np.allclose(t, grid.nodes, rtol=1e-13, atol=0.0):
            return cls(grid, u, N=N, bounded=bounded)
        from scipy.interpolate import CubicSpline

        spline = CubicSpline(t, u, extrapolate=True)
        inside = (grid.nodes >= t[0]) & (grid.nodes <= t[-1])
        vals = np.where(inside, spline(grid.nodes), 0.0)
        vals[grid.nodes < t[0]] = u[0]
        return cls(grid, vals, N=N, bounded=bounded)


def read_profile_csv(path):
    ts, us = [], []
    with open(path, newline="") as fh:
        rows = (line for line in fh if not line.startswith("#"))
        reader = csv.reader(rows)
        header = next(reader)
        if [h.strip() for h in header[:2]] != ["t", "u"]:
            raise GridError(f"expected header 't,u', got {header}")
        for row in reader:
            if row:
                ts.append(float(row[0]))
                us.append(float(row[1]))
    return np.asarray(ts), np.asarray(us)


def refine(grid, factor=2):
    """Grid with ``factor`` times as many nodes and the same grading law."""
    g = grid.grading or Grading()
    if g.kind == "geometric" and g.layers is None:
        g = replace(g, layers=min(40, (grid.P - 1) // 3))
    return build_grid(grid.n * factor, grid.T_max, g)
