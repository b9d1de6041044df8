"""Continuous piecewise-polynomial space on a RadialGrid.

Degree ``order - 1`` Lagrange elements with Gauss-Lobatto nodes, one element
per grid panel.  The degree of freedom at ``T_max`` is removed (homogeneous
Dirichlet data); the origin stays free, the natural condition there.
"""

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy import sparse

from .quadrature import RadialFn, _reference


def _lobatto(m):
    inner = npleg.Legendre.basis(m - 1).deriv().roots()
    return np.concatenate([[-1.0], np.sort(inner.real), [1.0]])


class FESpace:
    """Dirichlet-at-``T_max`` finite element space; coefficients are nodal values."""

    def __init__(self, grid):
        self.grid = grid
        m = grid.order
        P = grid.P
        xl = _lobatto(m)
        x, _, Vinv_gauss, dcoef, _ = _reference(m)
        # Lobatto-Lagrange basis evaluated at the Gauss nodes
        Vl = npleg.legvander(xl, m - 1)
        Cl = np.linalg.inv(Vl)
        Vg = npleg.legvander(x, m - 1)
        E_ref = Vg @ Cl
        D_ref = Vg @ dcoef @ Cl
        ndof_full = P * (m - 1) + 1
        rows, cols, ev, dv = [], [], [], []
        for j in range(P):
            r0 = j * m
            c0 = j * (m - 1)
            scale = 2.0 / grid.h[j]
            for a in range(m):
                for b in range(m):
                    rows.append(r0 + a)
                    cols.append(c0 + b)
                    ev.append(E_ref[a, b])
                    dv.append(D_ref[a, b] * scale)
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        keep = cols < ndof_full - 1
        shape = (grid.n, ndof_full - 1)
        self.E = sparse.csr_matrix((np.asarray(ev)[keep], (rows[keep], cols[keep])), shape=shape)
        self.Ed = sparse.csr_matrix((np.asarray(dv)[keep], (rows[keep], cols[keep])), shape=shape)
        mid = 0.5 * (grid.edges[:-1] + grid.edges[1:])
        pts = (mid[:, None] + 0.5 * grid.h[:, None] * xl[None, :])
        dof_t = np.concatenate([pts[:, :-1].ravel(), [grid.T_max]])
        self.dof_t = dof_t[:-1]
        self.ndof = ndof_full - 1
        self._forms = {}

    def function(self, c, N, bounded=False):
        c = np.asarray(c, dtype=float)
        return RadialFn(self.grid, self.E @ c, self.Ed @ c, N=N, bounded=bounded)

    def interpolate(self, u):
        """Nodal coefficients of the interpolant of ``u`` (RadialFn or callable)."""
        if isinstance(u, RadialFn):
            return u.eval(self.dof_t)
        return np.asarray(u(self.dof_t), dtype=float)

    def basis_at_rule(self, gamma, N):
        """``(rule, Phi, dPhi)``: basis values and derivatives at the nodes of a weighted rule."""
        key = (float(gamma), int(N))
        if key not in self._forms:
            rule = self.grid.weighted_rule(gamma, N)
            self._forms[key] = (rule, (rule.S @ self.E).tocsr(), (rule.S @ self.Ed).tocsr())
        return self._forms[key]

    def stiffness(self, alpha, N):
        """``K_ij = omega int t^alpha phi_i' phi_j' sinh^{N-1}``."""
        rule, _, dP = self.basis_at_rule(alpha, N)
        return (dP.T @ sparse.diags(rule.weights) @ dP).tocsc()

    def mass(self, gamma, N):
        """``M_ij = omega int t^gamma phi_i phi_j sinh^{N-1}``."""
        rule, P, _ = self.basis_at_rule(gamma, N)
        return (P.T @ sparse.diags(rule.weights) @ P).tocsc()


def fe_space(grid):
    """Shared :class:`FESpace` for ``grid`` (built once per grid)."""
    cache = grid._cache
    if "fe" not in cache:
        cache["fe"] = FESpace(grid)
    return cache["fe"]
