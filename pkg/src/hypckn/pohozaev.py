"""Pohozaev-type identity for radial Dirichlet solutions on geodesic balls.

For ``-div(d^alpha rho^(N-2) grad u) = d^beta rho^N |u|^(p-2) u`` on the
Euclidean ball ``|x| < R`` with ``u = 0`` on the sphere:

    -1/2 int_{|x|=R} d^alpha rho^(N-2) |grad u|^2 (x . nu)
        = int d^alpha rho^(N-2) |grad u|^2 * bracket2 dx
          + 1/(2p) int u^2 * L(F) dx

with ``F = div(d^beta rho^N x)/(d^beta rho^N)`` and
``L(F) = div(d^alpha rho^(N-2) grad F)``.  Every term is evaluated twice:
in the geodesic coordinate ``t`` and literally in the Euclidean radius ``r``.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import DegenerateError, DomainError, PohozaevError
from .functionals import rayleigh_weighted
from .geometry import (
    Params,
    critical_exponent,
    div_factor,
    ensure_valid,
    geom_factors,
    r_of_d,
    sobolev_exponent,
    sphere_area,
    supercritical_threshold,
    validate,
)
from .kernels import scan_factors
from .quadrature import Grading, RadialFn, RadialGrid, build_grid

CROSS_TOL = 1e-6
DIRICHLET_TOL = 1e-6
RESIDUAL_FLOOR = 1e-300


@dataclass(frozen=True)
class BallDomain:
    """Geodesic ball of radius ``T`` about the origin (Euclidean radius ``tanh(T/2)``)."""

    T: float

    def __post_init__(self):
        if not self.T > 0:
            raise DomainError("ball radius must be positive")
        if not self.R_e < 1.0:
            raise DomainError("ball radius too large for double precision")

    @property
    def R_e(self):
        return math.tanh(0.5 * self.T)


# ---------------------------------------------------------------------------
# pointwise factors


def bracket2(params, r):
    """``-1 + div(d^a rho^(N-2) x)/(2 d^a rho^(N-2)) - div(d^b rho^N x)/(p d^b rho^N)``."""
    N, a, b, p = params.N, params.alpha, params.beta, params.p
    g = geom_factors(r)
    r = np.asarray(r, dtype=float)
    return ((N - 2.0) / 2.0 - N / p) * (1.0 + g.rho * r * r) + (a / 2.0 - b / p) * g.B


def _lap_core(params, g, r):
    N, a, b = params.N, params.alpha, params.beta
    rr = g.rho * r
    return ((N * g.A + (N - 1.0 + a) * g.B) * (N * g.dist + b * g.A / rr)
            + N * g.dist * g.B + b * g.B_minus_1 * (g.B + 1.0) / rr)


def laplacian_factor(params, r):
    """``div(d^alpha rho^(N-2) grad F)`` for ``F = div_factor(beta, r, N)``, in closed form."""
    if not params.beta > -params.N:
        raise DomainError("laplacian_factor needs beta > -N")
    r = np.asarray(r, dtype=float)
    g = geom_factors(r)
    return g.dist ** (params.alpha - 1.0) * g.rho ** params.N * _lap_core(params, g, r)


def laplacian_factor_fd(params, r, h=None):
    """Second-order finite differences of ``r^(1-N) (r^(N-1) d^alpha rho^(N-2) F')'``."""
    N, a, b = params.N, params.alpha, params.beta
    r = float(r)
    h = h or 1e-4 * min(r, 1.0 - r)

    def flux(x):
        dF = (div_factor(b, x + h, N) - div_factor(b, x - h, N)) / (2.0 * h)
        g = geom_factors(x)
        return x ** (N - 1) * g.dist ** a * g.rho ** (N - 2) * dF

    return (flux(r + h) - flux(r - h)) / (2.0 * h) / r ** (N - 1)


def scan(params, n=10_000, r_max=1.0 - 1e-6, use_numba=None):
    """``(r, bracket2, laplacian_factor)`` on ``n`` radii spread over ``(0, r_max]``."""
    k = n // 2
    r = np.concatenate([np.geomspace(1e-8, 0.1, k, endpoint=False), np.linspace(0.1, r_max, n - k)])
    br, lap = scan_factors(r, params.N, params.alpha, params.beta, params.p, use_numba=use_numba)
    return r, br, lap


def write_scan_csv(path, r, br, lap):
    with open(path, "w") as fh:
        fh.write("# schema=1\nr,bracket2,laplacian_factor\n")
        for row in zip(r, br, lap):
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


# ---------------------------------------------------------------------------
# identity report


@dataclass
class PohozaevReport:
    boundary_term: float
    bracket_integral: float
    laplacian_integral: float
    residual: float
    min_bracket: float
    min_laplacian_factor: float
    cross_agreement: float
    r_terms: tuple = field(default=(float("nan"),) * 3)
    hypothesis_ok: bool = True
    supercritical: bool = False

    @property
    def lhs(self):
        return self.boundary_term

    @property
    def rhs(self):
        return self.bracket_integral + self.laplacian_integral

    def to_dict(self):
        d = asdict(self)
        rb, rbr, rl = d.pop("r_terms")
        d.update(boundary_term_r=rb, bracket_integral_r=rbr, laplacian_integral_r=rl)
        return d


def _t_terms(u, params, T):
    N, a, p = params.N, params.alpha, params.p
    grid = u.grid
    rule = grid.weighted_rule(a, N)
    t = rule.nodes
    r = r_of_d(t)
    g = geom_factors(r)
    du = rule.sample(u.derivs)
    uu = rule.sample(u.values)
    br = bracket2(params, r)
    core = _lap_core(params, g, r) / g.dist
    bracket_int = float(np.dot(rule.weights, du * du * br))
    # u^2 L(F) dx = u^2 d^(alpha-1) core dV, i.e. t^alpha u^2 (core/d) dV
    lap_int = float(np.dot(rule.weights, uu * uu * core)) / (2.0 * p)
    R = math.tanh(0.5 * T)
    dT = float(u.deriv_at(T))
    rhoR = 2.0 / (1.0 - R * R)
    boundary = -0.5 * sphere_area(N) * T ** a * math.sinh(T) ** (N - 1) * rhoR * R * dT * dT
    return boundary, bracket_int, lap_int


def _r_terms(u, params, T):
    """Literal Euclidean-radius quadrature, panels aligned with the t-grid."""
    N, a, p = params.N, params.alpha, params.p
    grid = u.grid
    edges_r = np.tanh(0.5 * grid.edges)
    rg = RadialGrid(edges_r, grid.order)
    rule = rg.power_rule(a + N - 1.0)
    r = rule.nodes
    g = geom_factors(r)
    t = g.dist
    uu = u.eval(t)
    ur = u.deriv_at(t) * g.rho  # du/dr
    om = sphere_area(N)
    br = bracket2(params, r)
    dr_a = (t / r) ** a  # d^alpha / r^alpha, smooth
    bracket_int = om * float(np.dot(rule.weights, dr_a * g.rho ** (N - 2) * ur * ur * br))
    lap = dr_a * g.rho ** N * _lap_core(params, g, r) / t
    lap_int = om * float(np.dot(rule.weights, uu * uu * lap)) / (2.0 * p)
    R = edges_r[-1]
    gR = geom_factors(R)
    urR = float(u.deriv_at(T)) * gR.rho
    boundary = -0.5 * gR.dist ** a * gR.rho ** (N - 2) * urR * urR * R * om * R ** (N - 1)
    return boundary, bracket_int, lap_int


def pohozaev_report(u, dom, params, *, check_cross=True):
    """Evaluate both sides of the identity for a radial Dirichlet ``u`` on ``dom``."""
    ensure_valid(params, "pohozaev")
    hyp = all(v.fatal or v.constraint != "N >= alpha-1" for v in validate(params, "pohozaev"))
    T = dom.T
    if abs(u.grid.T_max - T) > 1e-12 * T:
        raise PohozaevError(f"u lives on [0, {u.grid.T_max}] but the domain radius is {T}")
    umax = float(np.max(np.abs(u.values)))
    uT = abs(float(u.eval(T)))
    if uT > DIRICHLET_TOL * max(umax, 1e-300):
        raise PohozaevError(f"u(T) = {uT:.3e} is not a Dirichlet trace (max |u| = {umax:.3e})")
    tt = _t_terms(u, params, T)
    rt = _r_terms(u, params, T)
    scale = max(max(abs(x) for x in tt), 1e-300)
    cross = max(abs(x - y) / max(abs(x), abs(y), 1e-12 * scale) if (x or y) else 0.0
                for x, y in zip(tt, rt))
    if check_cross and cross > CROSS_TOL:
        raise PohozaevError(f"t- and r-coordinate evaluations disagree ({cross:.2e})")
    lhs, rhs = tt[0], tt[1] + tt[2]
    res = abs(lhs - rhs) / (abs(lhs) + abs(rhs) + RESIDUAL_FLOOR)
    r = np.linspace(dom.R_e * 1e-4, dom.R_e, 10_000)
    br, lap = scan_factors(r, params.N, params.alpha, params.beta, params.p)
    return PohozaevReport(
        boundary_term=tt[0], bracket_integral=tt[1], laplacian_integral=tt[2], residual=res,
        min_bracket=float(br.min()), min_laplacian_factor=float(lap.min()),
        cross_agreement=cross, r_terms=rt, hypothesis_ok=hyp,
        supercritical=params.p >= supercritical_threshold(params.N, params.alpha, params.beta),
    )


def forcing_bound(report):
    """Upper bound on ``int d^alpha |grad u|^2`` implied by the identity.

    When both volume factors are nonnegative and the boundary term is
    nonpositive, ``min_bracket * grad <= bracket_int <= |lhs - rhs|``.
    """
    if not report.min_bracket > 0:
        raise DegenerateError("forcing bound needs a strictly positive bracket")
    return abs(report.lhs - report.rhs) / report.min_bracket


def _d1(f, x, h):
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12.0 * h)


def bochner_residual(f, r, h=1e-3):
    """Finite-difference check of ``grad u . grad(grad u . x) - |grad u|^2 - 1/2 grad|grad u|^2 . x``
    for radial ``u(x) = f(|x|)``, relative to ``|grad u|^2 + r |grad u| |u''|``.

    Fourth-order central differences in ``r``.
    """
    r = float(r)

    def ur(x):
        return _d1(f, x, h)

    a = ur(r)
    gp = _d1(lambda x: x * ur(x), r, h)
    sq_p = _d1(lambda x: ur(x) ** 2, r, h)
    res = a * gp - a * a - 0.5 * sq_p * r
    urr = _d1(ur, r, h)
    return abs(res) / max(a * a + r * abs(a * urr), 1e-300)


# ---------------------------------------------------------------------------
# concentrating families


def _bump(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = s < 1.0
    out[m] = np.exp(1.0 - 1.0 / (1.0 - s[m] ** 2))
    return out


def _bump_d(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = s < 1.0
    sm = s[m]
    out[m] = np.exp(1.0 - 1.0 / (1.0 - sm ** 2)) * (-2.0 * sm / (1.0 - sm ** 2) ** 2)
    return out


def _bubble(L):
    c = 1.0 / math.sqrt(1.0 + L * L)

    def f(s):
        s = np.asarray(s, dtype=float)
        return np.where(s < L, 1.0 / np.sqrt(1.0 + s * s) - c, 0.0)

    def df(s):
        s = np.asarray(s, dtype=float)
        return np.where(s < L, -s / (1.0 + s * s) ** 1.5, 0.0)

    return f, df, L


PROFILES = ("bump", "bubble")


@dataclass
class ProbeReport:
    p: float
    profile: str
    eps: list
    quotients: list
    scaling_exponent: float
    regime: str

    @property
    def ratios(self):
        q = self.quotients
        return [b / a for a, b in zip(q, q[1:])]

    def tail_decreasing(self, k=5, bound=0.95):
        return all(x < bound for x in self.ratios[-k:])

    def increasing(self):
        return all(x > 1.0 for x in self.ratios)

    def to_dict(self):
        d = asdict(self)
        d["ratios"] = self.ratios
        return d


def concentrating_quotients(params, dom, family_size=12, *, profile="bump", shrink=0.5,
                            n=256, bubble_support=200.0, eps0=None):
    """Quotients ``(||u_eps||^2 / (int d^beta |u_eps|^p)^(2/p))`` for ``u_eps(t) = phi(t/eps)``."""
    if profile == "bump":
        f, df, support = _bump, _bump_d, 1.0
    elif profile == "bubble":
        f, df, support = _bubble(bubble_support)
    else:
        raise ValueError(f"unknown profile {profile!r}; expected one of {PROFILES}")
    N, a, b, p = params.N, params.alpha, params.beta, params.p
    eps = eps0 if eps0 is not None else dom.T / support
    eps_list, quots = [], []
    for _ in range(family_size):
        T_e = eps * support
        if T_e < 1e-12 * dom.T or T_e < 1e-200:
            raise DegenerateError(f"family underflow at eps = {eps:.3e}")
        grid = build_grid(n, T_e, Grading(core=0.25 * T_e))
        e = eps
        u = RadialFn.from_callable(grid, lambda t: f(t / e), lambda t: df(t / e) / e, N=N, bounded=True)
        quots.append(rayleigh_weighted(u, a, b, p, params.lam))
        eps_list.append(eps)
        eps *= shrink
    expo = (N - 2.0 + a) - 2.0 * (N + b) / p
    crit = critical_exponent(N, a, b)
    regime = "supercritical" if p > crit else ("critical" if p == crit else "subcritical")
    return ProbeReport(p, profile, eps_list, quots, expo, regime)


def supercritical_probe(params, dom, family_size=12, **kw):
    """Concentrating-family quotients for the Dirichlet problem on ``dom``."""
    ensure_valid(params, "pohozaev")
    return concentrating_quotients(params, dom, family_size, **kw)


def euclidean_bubble_quotient(N=3):
    """Sobolev quotient of ``(1+|x|^2)^((2-N)/2)`` in R^N by adaptive quadrature."""
    ps = sobolev_exponent(N)
    k = 0.5 * (N - 2.0)

    def u(s):
        return (1.0 + s * s) ** -k

    def du(s):
        return -2.0 * k * s * (1.0 + s * s) ** (-k - 1.0)

    om = sphere_area(N)
    num = om * quad(lambda s: du(s) ** 2 * s ** (N - 1), 0, np.inf, epsabs=0, epsrel=1e-13, limit=400)[0]
    den = om * quad(lambda s: u(s) ** ps * s ** (N - 1), 0, np.inf, epsabs=0, epsrel=1e-13, limit=400)[0]
    return num / den ** (2.0 / ps)


def sobolev_constant_exact(N):
    """``pi N (N-2) (Gamma(N/2)/Gamma(N))^(2/N)``."""
    return math.pi * N * (N - 2) * (math.gamma(N / 2) / math.gamma(N)) ** (2.0 / N)


def ball_solution_params(N=3, p=4.0, alpha=0.0, beta=0.0):
    """Solve-mode parameters matching a Pohozaev exponent (``lam = 0``, ``q = p``)."""
    return Params(N=N, alpha=alpha, beta=beta, lam=0.0, q=p, p=p)
