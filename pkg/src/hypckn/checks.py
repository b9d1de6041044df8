"""Invariant suite run by ``hypckn verify``.

Every check returns a :class:`CheckResult` with the worst observed violation
and the tolerance it is compared against.  Sample sets are seeded so runs are
reproducible.
"""

import math
import warnings
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy.integrate import quad

from .errors import TailWarning
from .functionals import cov_residual, hardy_infimum, hardy_quotient, rayleigh_spectral
from .geometry import (
    critical_exponent,
    dist,
    dist_bounds_check,
    hardy_constant,
    r_of_d,
    rho,
    sobolev_exponent,
    sphere_area,
)
from .geometry import Params
from .pohozaev import bochner_residual, bracket2, laplacian_factor, laplacian_factor_fd, scan
from .quadrature import RadialFn, build_grid, integrate_weighted


@dataclass(frozen=True)
class CheckResult:
    name: str
    worst: float
    tol: float
    passed: bool
    detail: str = ""

    def to_row(self):
        return [self.name, self.worst, self.tol, self.passed, self.detail]

    def to_dict(self):
        return asdict(self)


def _result(name, worst, tol, detail="", upper=True):
    ok = worst <= tol if upper else worst >= tol
    return CheckResult(name, float(worst), float(tol), bool(ok), detail)


def inject_weight_fault(grid, gamma, N, index=-1, factor=1.5):
    """Test hook: scale one weight of the cached weighted rule ``(gamma, N)``."""
    rule = grid.weighted_rule(gamma, N)
    w = np.array(rule.weights)
    w[index] *= factor
    grid._cache[("weighted", float(gamma), int(N))] = replace(rule, weights=w)


# ---------------------------------------------------------------------------


def check_geometry(n=10_000, seed=0):
    rng = np.random.default_rng(seed)
    r = np.sort(rng.uniform(1e-6, 0.999, n))
    d = dist(r)
    sinh_err = np.max(np.abs(rho(r) * r - np.sinh(d)) / np.sinh(d))
    trip = np.max(np.abs(r_of_d(d) - r) / r)
    lo, hi = dist_bounds_check(r, rtol=0.0)
    bound = np.max(np.concatenate([np.maximum(0.0, 2 * r - d) / d, np.maximum(0.0, d - 2 * r / (1 - r * r)) / d]))
    worst = max(sinh_err, trip, bound)
    return _result("geometry", worst, 1e-12, f"sinh={sinh_err:.1e} roundtrip={trip:.1e} bounds_ok={bool(lo.all() and hi.all())}")


def _coordinate_integrands():
    return [
        (0.0, lambda t: np.exp(-2.0 * t)),
        (1.0, lambda t: np.exp(-t * t)),
        (-1.5, lambda t: 1.0 / (1.0 + t * t)),
        (0.5, lambda t: np.cos(t)),
        (2.0, lambda t: np.exp(-3.0 * t) * (1 + t)),
        (-0.5, lambda t: np.sin(t + 0.3) ** 2),
        (0.0, lambda t: t ** 3 * np.exp(-t)),
        (-2.5, lambda t: np.exp(-0.5 * t)),
        (1.5, lambda t: 1.0 / np.cosh(t)),
        (0.25, lambda t: np.log1p(t)),
    ]


def coordinate_consistency(T=1.0, N=3, n=256):
    """Max relative gap between the t-grid rule and an r-coordinate adaptive quadrature."""
    grid = build_grid(n, T)
    R = math.tanh(0.5 * T)
    om = sphere_area(N)
    worst = 0.0
    for gamma, f in _coordinate_integrands():
        vt = integrate_weighted(f, gamma, grid, N, check_tail=False)

        def g(r, f=f, gamma=gamma):
            d = 2.0 * math.atanh(r)
            ratio = d / r if r > 0 else 2.0
            return float(f(d)) * ratio ** gamma * (2.0 / (1.0 - r * r)) ** N

        vr = om * quad(g, 0.0, R, weight="alg", wvar=(gamma + N - 1.0, 0.0),
                       epsabs=0.0, epsrel=1e-13, limit=200)[0]
        worst = max(worst, abs(vt - vr) / abs(vr))
    return worst


def check_quadrature(fault=None):
    grid = build_grid(256, 1.0)
    if fault == "weight":
        inject_weight_fault(grid, 0.0, 3)
    vol = integrate_weighted(lambda t: np.ones_like(t), 0.0, grid, 3, check_tail=False)
    exact = math.pi * (math.sinh(2.0) - 2.0)
    err = abs(vol - exact) / exact
    cc = coordinate_consistency()
    return _result("quadrature", max(err / 1e-8, cc / 1e-8) * 1e-8, 1e-8,
                   f"volume={vol:.10f} rel_err={err:.1e} coordinates={cc:.1e}")


def _hardy_samples(grid, N):
    out = []
    for k in (1, 2, 3):
        for c in (1.5, 2.0, 3.0):
            out.append(RadialFn.from_callable(grid, lambda t, k=k, c=c: t ** k * np.exp(-c * t), N=N))
    out.append(RadialFn.from_callable(grid, lambda t: np.exp(-2 * t), N=N))
    out.append(RadialFn.from_callable(grid, lambda t: np.exp(-(t - 1.0) ** 2 * 4), N=N))
    out.append(RadialFn.from_callable(grid, lambda t: np.exp(-1.5 * t) / (1.0 + t * t), N=N))
    return out


def check_hardy(alphas=(0.0, 1.0), N=3):
    grid = build_grid(512, 40.0)
    worst_floor = 0.0
    worst_inf = 0.0
    notes = []
    for a in alphas:
        C = hardy_constant(N, a)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TailWarning)
            qs = [hardy_quotient(u, a) / C for u in _hardy_samples(grid, N)]
        mu, _ = hardy_infimum(N, a)
        worst_floor = max(worst_floor, 1.0 - min(qs))
        worst_inf = max(worst_inf, mu / C - 1.0)
        notes.append(f"alpha={a}: min_sampled/C={min(qs):.6f} infimum/C={mu / C:.5f}")
    ok = worst_floor <= 1e-6 and worst_inf <= 0.02
    return CheckResult("hardy", max(worst_floor, worst_inf), 0.02, ok, "; ".join(notes))


def check_spectral(N=3):
    grid = build_grid(512, 40.0)
    floor = 0.25 * (N - 1) ** 2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TailWarning)
        qs = [rayleigh_spectral(u) / floor for u in _hardy_samples(grid, N)]
        fam = [rayleigh_spectral(RadialFn.from_callable(grid, lambda t, k=k: np.exp(-(1 + 1 / k) * t), N=N))
               for k in (1, 2, 5, 10, 20, 50)]
    worst = max(1.0 - min(qs), 0.0)
    reach = min(fam) / floor
    ok = worst <= 1e-6 and reach <= 1.05
    return CheckResult("spectral", max(worst, reach - 1.0), 0.05, ok,
                       f"min_sampled/floor={min(qs):.6f} family_min/floor={reach:.5f}")


def cov_samples(n=20, N=3, seed=1):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        alpha = rng.uniform(2 - N + 0.1, 2.0)
        g1, g2 = rng.uniform(0.0, 1.0, 2)
        a1, a2 = rng.uniform(-0.5, 1.0, 2)
        c = rng.uniform(1.5, 3.0)
        out.append((alpha, g1, g2, (a1, a2, c)))
    return out


def check_cov(N=3):
    grid = build_grid(512, 40.0)
    worst = 0.0
    for alpha, g1, g2, (a1, a2, c) in cov_samples(N=N):
        w = RadialFn.from_callable(grid, lambda t: (1 + a1 * t + a2 * t * t) * np.exp(-c * t),
                                   lambda t: (a1 + 2 * a2 * t - c * (1 + a1 * t + a2 * t * t)) * np.exp(-c * t), N=N)
        worst = max(worst, cov_residual(w, alpha, g1, g2))
    return _result("change_of_variables", worst, 1e-6)


POSITIVITY_PARAMS = (
    # (N, alpha, beta, p) with p >= max{2*, 2_alpha^beta}, -N < alpha-2 <= beta, N >= alpha-1
    (3, 0.0, 0.0, 6.0),
    (3, 0.0, 0.0, 8.0),
    (3, 1.0, 0.5, 7.0),
    (3, 0.0, -1.0, 6.0),
    (3, 0.5, -0.5, 6.5),
    (3, -0.5, -2.4, 6.0),
    (3, 2.0, 1.0, 6.0),
    (3, 4.0, 3.0, 6.0),
    (4, 0.0, 0.0, 4.0),
    (4, 1.0, 1.0, 5.0),
    (5, 2.0, 1.0, 10.0 / 3.0),
    (6, 3.0, 2.0, 3.0),
)


def positivity_params():
    out = []
    for N, a, b, p in POSITIVITY_PARAMS:
        assert p >= max(sobolev_exponent(N), critical_exponent(N, a, b)) - 1e-12
        assert -N < a - 2 <= b and N >= a - 1
        out.append(Params(N=N, alpha=a, beta=b, p=p))
    return out


def check_volume_factors(n=10_000):
    worst = 0.0
    for P in positivity_params():
        _, br, lap = scan(P, n=n)
        worst = max(worst, -br.min(), -lap.min())
    r = np.linspace(1e-6, 1 - 1e-6, n)
    zero = np.max(np.abs(bracket2(Params(N=3, p=6.0), r)))
    ok = worst <= 1e-10 and zero <= 1e-14
    return CheckResult("volume_factors", max(worst, 0.0), 1e-10, bool(ok), f"boundary_case_max|bracket2|={zero:.1e}")


def check_laplacian_fd():
    worst = 0.0
    for P in positivity_params()[:6]:
        for r in (0.1, 0.3, 0.5, 0.7):
            a = laplacian_factor(P, r)
            b = laplacian_factor_fd(P, r)
            worst = max(worst, abs(a - b) / abs(b))
    return _result("laplacian_fd", worst, 1e-4)


def check_bochner(n=20, seed=2):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        c1, c2, c3 = rng.uniform(0.5, 2.0, 3)
        r = rng.uniform(0.1, 0.9)
        f = lambda x, c1=c1, c2=c2, c3=c3: np.exp(-c1 * x * x) * np.cos(c2 * x) + c3 * x ** 3
        worst = max(worst, bochner_residual(f, r))
    return _result("bochner", worst, 1e-6)


CHECKS = {
    "geometry": check_geometry,
    "quadrature": check_quadrature,
    "hardy": check_hardy,
    "spectral": check_spectral,
    "cov": check_cov,
    "volume_factors": check_volume_factors,
    "laplacian": check_laplacian_fd,
    "bochner": check_bochner,
}


def run_checks(names=None, fault=None):
    names = list(CHECKS) if not names else list(names)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ValueError(f"unknown checks {unknown}; available: {sorted(CHECKS)}")
    out = []
    for n in names:
        fn = CHECKS[n]
        out.append(fn(fault=fault) if n == "quadrature" else fn())
    return out
