"""Hot loops: radial ODE integration for shooting and radius scans of the
Pohozaev volume factors.

Each kernel has a numba-compiled loop and a numpy/scipy path.  The module
level :data:`hypckn._accel.USE_NUMBA` picks the default; every public entry
takes ``use_numba`` to override it (the benchmark runs both).
"""

import math

import numpy as np
from scipy.integrate import solve_ivp

from ._accel import USE_NUMBA, optional_njit

# status codes shared by both integrator paths
REACHED_END = 0
HIT_ZERO = 1
STEP_COLLAPSE = 2
MAX_STEPS = 3
BLOWUP = 4

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)


@optional_njit(cache=True)
def _rhs(t, u, v, N, alpha, beta, lam, q):
    damp = alpha / t + (N - 1) / math.tanh(t)
    au = abs(u)
    src = t ** (beta - alpha) * (au ** (q - 2.0)) * u if au > 0.0 else 0.0
    return v, -damp * v - lam * u / (t * t) - src


@optional_njit(cache=True)
def _step(t, u, v, h, N, alpha, beta, lam, q):
    k1u, k1v = _rhs(t, u, v, N, alpha, beta, lam, q)
    k2u, k2v = _rhs(t + _C2 * h, u + h * _A21 * k1u, v + h * _A21 * k1v, N, alpha, beta, lam, q)
    k3u, k3v = _rhs(t + _C3 * h, u + h * (_A31 * k1u + _A32 * k2u),
                    v + h * (_A31 * k1v + _A32 * k2v), N, alpha, beta, lam, q)
    k4u, k4v = _rhs(t + _C4 * h, u + h * (_A41 * k1u + _A42 * k2u + _A43 * k3u),
                    v + h * (_A41 * k1v + _A42 * k2v + _A43 * k3v), N, alpha, beta, lam, q)
    k5u, k5v = _rhs(t + _C5 * h, u + h * (_A51 * k1u + _A52 * k2u + _A53 * k3u + _A54 * k4u),
                    v + h * (_A51 * k1v + _A52 * k2v + _A53 * k3v + _A54 * k4v),
                    N, alpha, beta, lam, q)
    k6u, k6v = _rhs(t + h, u + h * (_A61 * k1u + _A62 * k2u + _A63 * k3u + _A64 * k4u + _A65 * k5u),
                    v + h * (_A61 * k1v + _A62 * k2v + _A63 * k3v + _A64 * k4v + _A65 * k5v),
                    N, alpha, beta, lam, q)
    un = u + h * (_B1 * k1u + _B3 * k3u + _B4 * k4u + _B5 * k5u + _B6 * k6u)
    vn = v + h * (_B1 * k1v + _B3 * k3v + _B4 * k4v + _B5 * k5v + _B6 * k6v)
    k7u, k7v = _rhs(t + h, un, vn, N, alpha, beta, lam, q)
    eu = h * (_E1 * k1u + _E3 * k3u + _E4 * k4u + _E5 * k5u + _E6 * k6u + _E7 * k7u)
    ev = h * (_E1 * k1v + _E3 * k3v + _E4 * k4v + _E5 * k5v + _E6 * k6v + _E7 * k7v)
    return un, vn, eu, ev


@optional_njit(cache=True)
def _dopri_loop(t0, u0, v0, t_end, N, alpha, beta, lam, q, rtol, atol, t_out,
                stop_at_zero, max_steps):
    n_out = t_out.shape[0]
    U = np.full(n_out, np.nan)
    V = np.full(n_out, np.nan)
    t, u, v = t0, u0, v0
    h = min(1e-3 * max(t0, 1e-8), 0.01 * (t_end - t0))
    j = 0
    while j < n_out and t_out[j] <= t0:
        j += 1
    status = MAX_STEPS
    t_zero = np.inf
    for _ in range(max_steps):
        if t >= t_end:
            status = REACHED_END
            break
        target = t_end if j >= n_out else min(t_out[j], t_end)
        landing = False
        hs = h
        if t + hs >= target:
            hs = target - t
            landing = True
        un, vn, eu, ev = _step(t, u, v, hs, N, alpha, beta, lam, q)
        su = atol + rtol * max(abs(u), abs(un))
        sv = atol + rtol * max(abs(v), abs(vn))
        err = math.sqrt(0.5 * ((eu / su) ** 2 + (ev / sv) ** 2))
        if not (err <= 1.0) or not math.isfinite(un):
            fac = 0.2 if not math.isfinite(err) else max(0.2, 0.9 * err ** -0.2)
            h = hs * fac
            if h < 1e-15 * max(t, 1e-300):
                status = STEP_COLLAPSE
                break
            continue
        if stop_at_zero and un <= 0.0 < u:
            # bisect the step length for the crossing
            lo, hi = 0.0, hs
            for _b in range(80):
                mid = 0.5 * (lo + hi)
                um, _vm, _a, _b2 = _step(t, u, v, mid, N, alpha, beta, lam, q)
                if um > 0.0:
                    lo = mid
                else:
                    hi = mid
                if hi - lo <= 1e-15 * (t + hs):
                    break
            t_zero = t + 0.5 * (lo + hi)
            status = HIT_ZERO
            break
        t = target if landing else t + hs
        u, v = un, vn
        if abs(u) > 1e150:
            status = BLOWUP
            break
        while j < n_out and t_out[j] <= t:
            if t_out[j] == t:
                U[j] = u
                V[j] = v
            j += 1
        fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        h = max(h, hs) * fac if landing else hs * fac
    return status, t_zero, t, u, v, U, V


def integrate_radial(t0, u0, v0, t_end, N, alpha, beta, lam, q, *, rtol=1e-11, atol=1e-13,
                     t_out=None, stop_at_zero=False, max_steps=2_000_000, use_numba=None):
    """Integrate ``u'' + (alpha/t + (N-1)coth t) u' + lam u/t^2 + t^(beta-alpha)|u|^(q-2)u = 0``.

    Returns ``(status, t_zero, t_last, u_last, v_last, U, V)`` where ``U, V``
    hold ``u, u'`` at ``t_out`` (NaN where not reached).  With
    ``stop_at_zero`` integration halts at the first downward crossing of 0.
    """
    if use_numba is None:
        use_numba = USE_NUMBA
    t_out = np.zeros(0) if t_out is None else np.ascontiguousarray(t_out, dtype=float)
    args = (float(t0), float(u0), float(v0), float(t_end), float(N), float(alpha), float(beta),
            float(lam), float(q), float(rtol), float(atol))
    if use_numba:
        return _dopri_loop(*args, t_out, bool(stop_at_zero), int(max_steps))
    return _scipy_radial(*args, t_out, bool(stop_at_zero))


def _scipy_radial(t0, u0, v0, t_end, N, alpha, beta, lam, q, rtol, atol, t_out, stop_at_zero):
    def f(t, y):
        u, v = y
        src = t ** (beta - alpha) * abs(u) ** (q - 2.0) * u if u != 0.0 else 0.0
        return [v, -(alpha / t + (N - 1) / math.tanh(t)) * v - lam * u / (t * t) - src]

    def zero(t, y):
        return y[0]

    zero.terminal = True
    zero.direction = -1
    mask = (t_out > t0) & (t_out <= t_end)
    sol = solve_ivp(f, (t0, t_end), [u0, v0], method="RK45", rtol=rtol, atol=atol,
                    t_eval=t_out[mask] if mask.any() else None,
                    events=zero if stop_at_zero else None)
    U = np.full(t_out.size, np.nan)
    V = np.full(t_out.size, np.nan)
    k = sol.t.size if mask.any() else 0
    idx = np.flatnonzero(mask)[:k]
    if k:
        U[idx] = sol.y[0, :k]
        V[idx] = sol.y[1, :k]
    t_zero = np.inf
    if stop_at_zero and sol.status == 1 and sol.t_events[0].size:
        status, t_zero = HIT_ZERO, float(sol.t_events[0][0])
    elif sol.status == 0:
        status = REACHED_END
    else:
        status = STEP_COLLAPSE
    t_last = float(sol.t[-1]) if sol.t.size else t0
    u_last, v_last = (sol.y[0, -1], sol.y[1, -1]) if sol.t.size else (u0, v0)
    return status, t_zero, t_last, u_last, v_last, U, V


# ---------------------------------------------------------------------------
# radius scans of the Pohozaev volume factors


@optional_njit(cache=True)
def _scan_loop(r, N, alpha, beta, p):
    n = r.shape[0]
    br = np.empty(n)
    lap = np.empty(n)
    c1 = (N - 2.0) / 2.0 - N / p
    c2 = alpha / 2.0 - beta / p
    for i in range(n):
        x = r[i]
        rh = 2.0 / (1.0 - x * x)
        d = 2.0 * math.atanh(x)
        if x < 0.1:
            s = 0.0
            x2 = x * x
            pw = x * x2
            for k in range(1, 14):
                s += 4.0 * k / (2.0 * k + 1.0) * pw
                pw *= x2
        else:
            s = rh * x - d
        bm1 = s / d
        B = 1.0 + bm1
        A = rh * x * x - bm1
        rr = rh * x
        br[i] = c1 * (1.0 + rh * x * x) + c2 * B
        core = ((N * A + (N - 1.0 + alpha) * B) * (N * d + beta * A / rr)
                + N * d * B + beta * bm1 * (B + 1.0) / rr)
        lap[i] = d ** (alpha - 1.0) * rh ** N * core
    return br, lap


def _scan_numpy(r, N, alpha, beta, p):
    from .geometry import geom_factors

    g = geom_factors(r)
    rr = g.rho * r
    bm1 = g.B_minus_1
    br = ((N - 2.0) / 2.0 - N / p) * (1.0 + g.rho * r * r) + (alpha / 2.0 - beta / p) * g.B
    core = ((N * g.A + (N - 1.0 + alpha) * g.B) * (N * g.dist + beta * g.A / rr)
            + N * g.dist * g.B + beta * bm1 * (g.B + 1.0) / rr)
    return br, g.dist ** (alpha - 1.0) * g.rho ** N * core


def scan_factors(r, N, alpha, beta, p, *, use_numba=None):
    """``(bracket2(r), laplacian_factor(r))`` on an array of radii in ``(0, 1)``."""
    if use_numba is None:
        use_numba = USE_NUMBA
    r = np.ascontiguousarray(r, dtype=float)
    if use_numba:
        return _scan_loop(r, float(N), float(alpha), float(beta), float(p))
    return _scan_numpy(r, N, alpha, beta, p)
