"""Weighted energies, quotients and residuals of radial functions.

Every integral is ``omega_{N-1} int_0^T_max (...) sinh^{N-1}(t) dt`` in the
geodesic coordinate, where ``|grad_B u| = |u'(t)|`` for radial ``u``.  The
dimension comes from ``u.N``.
"""

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg

from .errors import DegenerateError
from .geometry import (
    Params,
    ckn_weights,
    ensure_valid,
    hardy_constant,
    sobolev_exponent,
)
from .quadrature import Grading, build_grid, tail_check
from .space import fe_space

DENOM_FLOOR = 1e-300
COV_FLOOR = 1e-12


def _wint(u, gamma, integrand):
    """``integrand(rule, sample)`` -> values at rule nodes; returns the weighted sum."""
    rule = u.grid.weighted_rule(gamma, u.N)
    vals = integrand(rule.sample)
    total = float(np.dot(rule.weights, vals))
    if not u.bounded:
        tail_check(rule, vals, total, u.grid)
    return total


def grad_energy(u, alpha):
    """``int d^alpha |grad_B u|^2 dV``."""
    return _wint(u, alpha, lambda s: s(u.derivs) ** 2)


def hardy_energy(u, alpha):
    """``int d^(alpha-2) u^2 dV``."""
    return _wint(u, alpha - 2.0, lambda s: s(u.values) ** 2)


def lq_weighted(u, beta, q):
    """``int d^beta |u|^q dV``."""
    if q < 1:
        raise ValueError("q must be >= 1")
    return _wint(u, beta, lambda s: np.abs(s(u.values)) ** q)


def shifted_norm_sq(u, alpha, lam):
    """``grad_energy - lam * hardy_energy``; the solver's energy norm."""
    g = grad_energy(u, alpha)
    return g if lam == 0 else g - lam * hardy_energy(u, alpha)


def energy_I(u, params):
    """``I(u) = 1/2 ||u||^2 - (1/q) int d^beta |u|^q dV``."""
    ensure_valid(params, "solve")
    norm = shifted_norm_sq(u, params.alpha, params.lam)
    return 0.5 * norm - lq_weighted(u, params.beta, params.q) / params.q


def fiber_maximizer(u, params):
    """``s* = (||u||^2 / lq)^(1/(q-2))``, the maximizer of ``s -> I(s u)``."""
    norm = shifted_norm_sq(u, params.alpha, params.lam)
    lq = _nonzero(lq_weighted(u, params.beta, params.q))
    return (norm / lq) ** (1.0 / (params.q - 2.0))


def _nonzero(x):
    if not abs(x) > DENOM_FLOOR:
        raise DegenerateError("quotient denominator vanishes (u == 0?)")
    return x


def nehari_gap(u, params):
    """Relative mismatch between ``||u||^2`` and ``int d^beta |u|^q``."""
    norm = shifted_norm_sq(u, params.alpha, params.lam)
    lq = lq_weighted(u, params.beta, params.q)
    return abs(norm - lq) / max(abs(norm), abs(lq), DENOM_FLOOR)


def residual_vector(u, params):
    """``(I'(u) phi_i, ||phi_i||)`` over the FE nodal basis of ``u.grid``."""
    N = u.N
    V = fe_space(u.grid)
    ra, _, dPa = V.basis_at_rule(params.alpha, N)
    rh, Ph, _ = V.basis_at_rule(params.alpha - 2.0, N)
    rb, Pb, _ = V.basis_at_rule(params.beta, N)
    du = ra.sample(u.derivs)
    r = dPa.T @ (ra.weights * du)
    diag = dPa.multiply(dPa).T @ ra.weights
    if params.lam != 0:
        uh = rh.sample(u.values)
        r = r - params.lam * (Ph.T @ (rh.weights * uh))
        diag = diag - params.lam * (Ph.multiply(Ph).T @ rh.weights)
    ub = rb.sample(u.values)
    r = r - Pb.T @ (rb.weights * np.abs(ub) ** (params.q - 2.0) * ub)
    return r, np.sqrt(np.maximum(diag, DENOM_FLOOR))


def weak_residual(u, params):
    """``max_i |I'(u) phi_i| / ||phi_i||`` over the nodal basis (Dirichlet at ``T_max``)."""
    ensure_valid(params, "solve")
    r, nrm = residual_vector(u, params)
    return float(np.max(np.abs(r) / nrm))


def rayleigh_ckn(u, a, b, N=None):
    """``int d^(-2a)|grad u|^2 / (int d^(-bp)|u|^p)^(2/p)`` with the CKN exponent ``p``."""
    N = u.N if N is None else N
    ensure_valid(Params(N=N, a=a, b=b), "ckn")
    alpha, beta, p = ckn_weights(N, a, b)
    den = _nonzero(lq_weighted(u, beta, p))
    return grad_energy(u, alpha) / den ** (2.0 / p)


def rayleigh_weighted(u, alpha, beta, p, lam=0.0):
    """``(grad - lam hardy) / (int d^beta |u|^p)^(2/p)``."""
    den = _nonzero(lq_weighted(u, beta, p))
    return shifted_norm_sq(u, alpha, lam) / den ** (2.0 / p)


def hardy_quotient(u, alpha):
    return grad_energy(u, alpha) / _nonzero(hardy_energy(u, alpha))


def rayleigh_spectral(u):
    """``int |grad u|^2 / int u^2``; bounded below by ``(N-1)^2/4``."""
    return grad_energy(u, 0.0) / _nonzero(lq_weighted(u, 0.0, 2.0))


def poincare_sobolev_ratio(u):
    """``(int |u|^(2*))^(2/2*) / (int |grad u|^2 - (N-1)^2/4 int u^2)``; finite for u != 0."""
    N = u.N
    ps = sobolev_exponent(N)
    top = lq_weighted(u, 0.0, ps) ** (2.0 / ps)
    gap = grad_energy(u, 0.0) - 0.25 * (N - 1) ** 2 * lq_weighted(u, 0.0, 2.0)
    return top / _nonzero(gap)


def interpolation_ratio(u, beta):
    """Hoelder split for ``-2 <= beta <= 0``; the returned ratio is ``<= 1``.

    ``int d^beta |u|^p  <=  (int d^-2 u^2)^(-beta/2) (int |u|^(2*))^((2+beta)/2)``
    with ``p = 2(N+beta)/(N-2)``.
    """
    if not -2.0 <= beta <= 0.0:
        raise ValueError("beta must lie in [-2, 0]")
    N = u.N
    p = 2.0 * (N + beta) / (N - 2.0)
    lhs = lq_weighted(u, beta, p)
    rhs = hardy_energy(u, 0.0) ** (-beta / 2.0) * lq_weighted(u, 0.0, sobolev_exponent(N)) ** ((2.0 + beta) / 2.0)
    return lhs / _nonzero(rhs)


# ---------------------------------------------------------------------------
# change of variables u = t^(alpha/2) w


@dataclass(frozen=True)
class CovSides:
    lhs: float
    rhs: float
    grad_w: float

    @property
    def residual(self):
        return abs(self.lhs - self.rhs) / (abs(self.lhs) + abs(self.rhs) + COV_FLOOR)


def cov_sides(w, alpha, gamma1, gamma2):
    """Both sides of the substitution identity for ``u = t^(alpha/2) w``.

    ``lhs = int |grad u|^2 - gamma1 u^2/d^2 - gamma2 u^2``; ``rhs`` is the
    ``w``-side expression.  The ``u``-side gradient is expanded as
    ``t^alpha w'^2 + alpha t^(alpha-1) w w' + (alpha^2/4) t^(alpha-2) w^2``
    so each piece carries an exact power of ``t``.
    """
    N = w.N
    wv, wd = w.values, w.derivs
    g_w = _wint(w, alpha, lambda s: s(wd) ** 2)
    h_w = _wint(w, alpha - 2.0, lambda s: s(wv) ** 2)
    m_w = _wint(w, alpha, lambda s: s(wv) ** 2)
    lhs = g_w - gamma1 * h_w - gamma2 * m_w
    rhs = g_w - gamma1 * h_w - gamma2 * m_w
    if alpha != 0:
        cross = _wint(w, alpha - 1.0, lambda s: s(wv) * s(wd))
        lhs += alpha * cross + 0.25 * alpha * alpha * h_w
        k = 0.5 * alpha * (N - 1)
        rule_h = w.grid.weighted_rule(alpha - 2.0, N)
        shape = rule_h.nodes / np.sinh(rule_h.nodes)
        curv = _wint(w, alpha - 2.0, lambda s: s(wv) ** 2 * shape)
        outer = _wint(w, alpha - 1.0, lambda s: s(wv) ** 2 * np.tanh(0.5 * w.grid.weighted_rule(alpha - 1.0, N).nodes))
        rhs -= 0.25 * alpha * (alpha - 2.0) * h_w + k * curv + k * outer
    return CovSides(lhs, rhs, g_w)


def cov_residual(w, alpha, gamma1, gamma2):
    """Relative residual of the substitution identity; 0 in exact arithmetic."""
    return cov_sides(w, alpha, gamma1, gamma2).residual


# ---------------------------------------------------------------------------
# reports and spectral estimates


@dataclass
class EnergyReport:
    grad_energy: float
    hardy_energy: float
    lq_mass: float
    shifted_norm_sq: float
    I_value: float
    quotients: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        q = d.pop("quotients")
        d.update({f"quotient_{k}": v for k, v in q.items()})
        return d


def energy_report(u, params, quotients=("ckn_weighted", "spectral")):
    g = grad_energy(u, params.alpha)
    h = hardy_energy(u, params.alpha)
    lq = lq_weighted(u, params.beta, params.q)
    s = g - params.lam * h
    out = {}
    for name in quotients:
        if name == "ckn_weighted":
            out[name] = s / _nonzero(lq) ** (2.0 / params.q)
        elif name == "spectral":
            out[name] = rayleigh_spectral(u)
        elif name == "hardy":
            out[name] = g / _nonzero(h)
        else:
            raise ValueError(f"unknown quotient {name!r}")
    return EnergyReport(g, h, lq, s, 0.5 * s - lq / params.q, out)


def hardy_infimum(N, alpha, *, T_max=1.0, layers=120, n=None, grid=None):
    """Smallest discrete Hardy quotient on a deeply graded grid.

    Generalized eigenproblem ``K c = mu M c`` with ``K`` the weighted stiffness
    and ``M`` the ``t^(alpha-2)`` mass.  Decreases toward
    ``((N-2+alpha)/2)^2`` as the innermost panel shrinks.
    Returns ``(mu, eigvec RadialFn)``.
    """
    if grid is None:
        n = n or 8 * (layers + 12)
        grid = build_grid(n, T_max, Grading(layers=layers, core=0.5 * T_max))
    V = fe_space(grid)
    K = V.stiffness(alpha, N).toarray()
    M = V.mass(alpha - 2.0, N).toarray()
    d = 1.0 / np.sqrt(np.diag(M))
    Ks = K * d[:, None] * d[None, :]
    Ms = M * d[:, None] * d[None, :]
    vals, vecs = linalg.eigh(Ks, Ms, subset_by_index=[0, 0])
    c = vecs[:, 0] * d
    c = c if c[np.argmax(np.abs(c))] > 0 else -c
    return float(vals[0]), V.function(c, N, bounded=True)


def hardy_gap(N, alpha, mu):
    return mu / hardy_constant(N, alpha) - 1.0
