"""Radial primitives of the Poincare ball and the problem parameter bundle.

All functions accept scalars or numpy arrays and broadcast.  ``r`` is the
Euclidean radius ``|x|`` in the unit ball, ``t`` the geodesic distance from
the origin, ``t = log((1 + r) / (1 - r))``.
"""

from dataclasses import asdict, dataclass, field
from math import gamma as _gamma_fn
from math import pi

import numpy as np

from .errors import DegenerateError, DomainError, ValidationError

# Series coefficients of rho*r - d = sum_k 4k/(2k+1) r^(2k+1), k >= 1.
_SERIES_K = np.arange(1, 14)
_SERIES_C = 4.0 * _SERIES_K / (2.0 * _SERIES_K + 1.0)
_SERIES_SWITCH = 0.1


def _as_r(r, *, open_left=False):
    r = np.asarray(r, dtype=float)
    bad = (r <= 0.0) if open_left else (r < 0.0)
    bad = bad | (r >= 1.0) | ~np.isfinite(r)
    if np.any(bad):
        lo = "(0" if open_left else "[0"
        raise DomainError(f"radius must lie in {lo}, 1); got {r[bad].ravel()[:3]}")
    return r


def _out(x):
    return x[()] if isinstance(x, np.ndarray) and x.ndim == 0 else x


def rho(r):
    """Conformal factor ``2 / (1 - r^2)``."""
    r = _as_r(r)
    return _out(2.0 / (1.0 - r * r))


def dist(r):
    """Hyperbolic distance from the origin, ``log((1+r)/(1-r))``."""
    r = _as_r(r)
    return _out(2.0 * np.arctanh(r))


def r_of_d(t):
    """Euclidean radius at geodesic distance ``t``; inverse of :func:`dist`."""
    t = np.asarray(t, dtype=float)
    if np.any((t < 0.0) | ~np.isfinite(t)):
        raise DomainError("geodesic distance must be a finite number >= 0")
    return _out(np.tanh(0.5 * t))


def sphere_area(N):
    """Area of the unit sphere S^(N-1) in R^N."""
    return 2.0 * pi ** (0.5 * N) / _gamma_fn(0.5 * N)


def _rho_r_minus_d(r):
    # rho*r - d without cancellation for small r; both terms are O(r).
    r = np.asarray(r, dtype=float)
    small = r < _SERIES_SWITCH
    out = np.empty_like(r)
    rs = r[small]
    if rs.size:
        powers = rs[..., None] ** (2 * _SERIES_K + 1)
        out[small] = powers @ _SERIES_C
    rl = r[~small]
    if rl.size:
        out[~small] = 2.0 * rl / (1.0 - rl * rl) - 2.0 * np.arctanh(rl)
    return out


@dataclass(frozen=True)
class GeomFactors:
    rho: object
    dist: object
    A: object
    B: object
    B_minus_1: object = None  # accurate B - 1 near the origin


def geom_factors(r):
    """Return ``(rho, d, A, B)`` with ``B = rho r / d`` and ``A = 1 + rho r^2 - B``.

    ``B - 1`` is computed from a cancellation-free series for small ``r`` so
    that ``A`` keeps full relative accuracy as ``r -> 0+`` (``A ~ 4r^2/3``).
    """
    r = _as_r(r, open_left=True)
    rh = 2.0 / (1.0 - r * r)
    d = 2.0 * np.arctanh(r)
    b_minus_1 = _rho_r_minus_d(r) / d
    B = 1.0 + b_minus_1
    A = rh * r * r - b_minus_1
    return GeomFactors(_out(rh), _out(d), _out(A), _out(B), _out(b_minus_1))


def dist_bounds_check(r, rtol=1e-14):
    """Check ``2r <= d(r) <= 2r/(1-r^2)``; returns ``(lower_ok, upper_ok)``."""
    r = _as_r(r)
    d = 2.0 * np.arctanh(r)
    lower = 2.0 * r <= d * (1.0 + rtol)
    upper = d <= 2.0 * r / (1.0 - r * r) * (1.0 + rtol)
    return _out(lower), _out(upper)


def div_factor(gamma, r, N):
    """``div(d^gamma rho^N x) / (d^gamma rho^N) = N + N rho r^2 + gamma B``."""
    g = geom_factors(r)
    return N + N * g.rho * np.asarray(r) ** 2 + gamma * g.B


def div_factor_grad(gamma, r, N):
    """``div(d^gamma rho^(N-2) x) / (d^gamma rho^(N-2)) = N + (N-2) rho r^2 + gamma B``."""
    g = geom_factors(r)
    return N + (N - 2) * g.rho * np.asarray(r) ** 2 + gamma * g.B


def critical_exponent(N, alpha, beta):
    """Weighted critical exponent ``2(N + beta) / (N - 2 + alpha)``."""
    den = N - 2.0 + alpha
    if den <= 0.0:
        raise DegenerateError(f"N - 2 + alpha = {den} must be positive")
    return 2.0 * (N + beta) / den


def hardy_constant(N, alpha):
    """Sharp weighted Hardy constant ``((N - 2 + alpha) / 2)^2``."""
    return 0.25 * (N - 2.0 + alpha) ** 2


def sobolev_exponent(N):
    return 2.0 * N / (N - 2.0)


def ckn_exponent(N, a, b):
    """CKN exponent ``p = 2N / (N - 2 + 2(b - a))``."""
    den = N - 2.0 + 2.0 * (b - a)
    if den <= 0.0:
        raise DegenerateError("N - 2 + 2(b - a) must be positive")
    return 2.0 * N / den


def ckn_weights(N, a, b):
    """Translate CKN parameters into ``(alpha, beta, p)`` with ``alpha = -2a``, ``beta = -b p``."""
    p = ckn_exponent(N, a, b)
    return -2.0 * a + 0.0, -b * p + 0.0, p  # +0.0 avoids -0.0 in reports


# ---------------------------------------------------------------------------
# parameter bundle


@dataclass(frozen=True)
class Params:
    """Problem parameters.  ``lam`` is the Hardy coefficient (``lambda``)."""

    N: int = 3
    alpha: float = 0.0
    beta: float = 0.0
    lam: float = 0.0
    q: float = None
    p: float = None
    a: float = None
    b: float = None

    def to_dict(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class Violation:
    constraint: str
    detail: str
    fatal: bool = field(default=True)

    def to_dict(self):
        return asdict(self)


MODES = ("ckn", "solve", "pohozaev")


def validate(params, mode):
    """List every constraint of ``mode`` that ``params`` violates.

    An empty list (or one holding only ``fatal=False`` entries) means the
    bundle is usable.  ``fatal=False`` marks hypotheses that only restrict
    what a computation proves, e.g. ``N >= alpha-1`` in Pohozaev mode.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    P = params
    out = []

    def bad(name, detail, fatal=True):
        out.append(Violation(name, detail, fatal))

    if int(P.N) != P.N or P.N < 3:
        bad("N >= 3", f"N = {P.N}")
        return out
    N = P.N

    if mode == "ckn":
        if P.a is None or P.b is None:
            bad("a, b given", "CKN mode needs both a and b")
            return out
        if not P.a < (N - 2) / 2:
            bad("a < (N-2)/2", f"a = {P.a}")
        if not P.b - P.a >= 0:
            bad("0 <= b-a", f"b - a = {P.b - P.a}")
        if not P.b - P.a <= 1:
            bad("b-a <= 1", f"b - a = {P.b - P.a}")
        if not out and P.p is not None:
            p = ckn_exponent(N, P.a, P.b)
            if abs(P.p - p) > 1e-12 * p:
                bad("p = 2N/(N-2+2(b-a))", f"p = {P.p}, expected {p}")
        return out

    if not -N < P.alpha - 2:
        bad("-N < alpha-2", f"alpha - 2 = {P.alpha - 2}")

    if mode == "solve":
        if not P.alpha - 2 < P.beta:
            bad("alpha-2 < beta", f"alpha - 2 = {P.alpha - 2}, beta = {P.beta}")
        if P.alpha - 2 > -N and not P.lam < hardy_constant(N, P.alpha):
            bad("lambda < ((N-2+alpha)/2)^2",
                f"lambda = {P.lam}, bound = {hardy_constant(N, P.alpha)}")
        if P.q is None:
            bad("q given", "solve mode needs q")
        elif P.alpha - 2 > -N:
            crit = critical_exponent(N, P.alpha, P.beta)
            if not 2 < P.q < crit:
                bad("2 < q < 2_alpha^beta", f"q = {P.q}, 2_alpha^beta = {crit}")
        return out

    # pohozaev
    if not P.alpha - 2 <= P.beta:
        bad("alpha-2 <= beta", f"alpha - 2 = {P.alpha - 2}, beta = {P.beta}")
    if P.p is None:
        bad("p given", "Pohozaev mode needs p")
    elif not P.p > 2:
        bad("p > 2", f"p = {P.p}")
    if not N >= P.alpha - 1:
        bad("N >= alpha-1", f"alpha = {P.alpha}; volume-factor positivity needs it", fatal=False)
    return out


def ensure_valid(params, mode):
    """Raise :class:`ValidationError` if ``params`` has fatal violations for ``mode``."""
    viol = [v for v in validate(params, mode) if v.fatal]
    if viol:
        raise ValidationError(viol)
    return params


def supercritical_threshold(N, alpha, beta):
    """``max{2*, 2_alpha^beta}``, the non-existence threshold."""
    return max(sobolev_exponent(N), critical_exponent(N, alpha, beta))
