"""Positive radial ground states of

    -div(d^alpha grad u) - lam d^(alpha-2) u = d^beta |u|^(q-2) u

by minimizing ``||v||^2`` (shifted energy) on ``{int d^beta |v|^q = 1}``,
plus an independent shooting solver for the ball problem.

Minimization runs a nonlinear inverse iteration

    v  <-  A^{-1} g(v) / G(A^{-1} g(v))^{1/q},    g(v) = d^beta |v|^(q-2) v,

where ``A`` is the shifted-energy matrix.  It is a projected gradient step in
the energy inner product, and the quotient never increases along it.  Close
to a critical point Newton's method on ``A u = g(u)`` finishes the job.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .errors import ConvergenceError, DegenerateError, ShootingError, TailError
from .functionals import energy_I, lq_weighted, nehari_gap, shifted_norm_sq, weak_residual
from .geometry import ensure_valid, hardy_constant
from .kernels import HIT_ZERO, REACHED_END, integrate_radial
from .quadrature import RadialFn, build_grid, refine
from .space import fe_space

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveOptions:
    tol: float = 1e-8  # projected-gradient stationarity
    residual_tol: float = 1e-6
    max_iter: int = 5000
    newton: bool = True
    newton_switch: float = 1e-3
    newton_max: int = 40
    domain: str = "space"  # "space": truncated full ball, "ball": Dirichlet problem on [0, T_max]
    tail_tol: float = 1e-10
    adapt_tmax: int = 2  # extra attempts with T_max * 1.25 after a tail failure
    init: object = None  # RadialFn, callable of t, or None

    def replace(self, **kw):
        return replace(self, **kw)


@dataclass
class SolveResult:
    u: RadialFn
    quotient: float
    residual: float
    method: str
    iterations: int
    converged: bool
    positivity_ok: bool
    nehari_gap: float
    stationarity: float = float("nan")
    energy: float = float("nan")
    monotone: bool = False
    tail_fraction: float = 0.0
    T_max: float = float("nan")
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        d = {
            "quotient": self.quotient,
            "residual": self.residual,
            "method": self.method,
            "iterations": self.iterations,
            "converged": self.converged,
            "positivity_ok": self.positivity_ok,
            "nehari_gap": self.nehari_gap,
            "stationarity": self.stationarity,
            "energy": self.energy,
            "monotone": self.monotone,
            "tail_fraction": self.tail_fraction,
            "T_max": self.T_max,
            "grid_n": self.u.grid.n,
        }
        d.update(self.extra)
        return d


class _Problem:
    """Discrete operators of the constrained quotient on one grid."""

    def __init__(self, grid, N, alpha, beta, lam, q):
        self.V = V = fe_space(grid)
        self.N, self.q = N, q
        A = V.stiffness(alpha, N)
        if lam != 0:
            A = A - lam * V.mass(alpha - 2.0, N)
        self.A = A.tocsc()
        diag = self.A.diagonal()
        if np.any(diag <= 0):
            raise DegenerateError("shifted energy is not positive on the discrete basis")
        self.s = 1.0 / np.sqrt(diag)
        D = sparse.diags(self.s)
        self.lu = splu((D @ self.A @ D).tocsc())
        self.rule, self.Pb, _ = V.basis_at_rule(beta, N)
        self.w = self.rule.weights

    def solve(self, b):
        return self.s * self.lu.solve(self.s * b)

    def at_nodes(self, c):
        return self.Pb @ c

    def G(self, c):
        return float(np.dot(self.w, np.abs(self.at_nodes(c)) ** self.q))

    def g(self, c):
        uq = self.at_nodes(c)
        return self.Pb.T @ (self.w * np.abs(uq) ** (self.q - 2.0) * uq)

    def energy(self, c):
        return float(c @ (self.A @ c))

    def normalize(self, c):
        G = self.G(c)
        if not G > 1e-300:
            raise DegenerateError("initial guess vanishes after normalization")
        return c / G ** (1.0 / self.q)

    def stationarity(self, c):
        """Energy-norm size of the projected gradient at normalized ``c``; also returns ``mu``."""
        mu = self.energy(c)
        x = self.solve(self.g(c))
        e = c - mu * x
        return math.sqrt(max(self.energy(e), 0.0) / mu), mu

    def newton(self, u, max_iter):
        q = self.q
        best = None
        for _ in range(max_iter):
            F = self.A @ u - self.g(u)
            fn = np.max(np.abs(F) * self.s)
            if best is not None and fn >= best[0] * 0.5 and fn < 1e-12 * best[2]:
                break
            scale = max(np.max(np.abs(self.A @ u) * self.s), 1e-300)
            if best is None or fn < best[0]:
                best = (fn, u.copy(), scale)
            if fn <= 1e-14 * scale:
                break
            uq = self.at_nodes(u)
            Mw = self.Pb.T @ sparse.diags(self.w * (q - 1.0) * np.abs(uq) ** (q - 2.0)) @ self.Pb
            J = (self.A - Mw).tocsc()
            D = sparse.diags(self.s)
            try:
                du = self.s * splu((D @ J @ D).tocsc()).solve(self.s * F)
            except RuntimeError:
                break
            u = u - du
            if not np.all(np.isfinite(u)):
                break
        F = self.A @ u - self.g(u)
        fn = np.max(np.abs(F) * self.s)
        if best is not None and best[0] < fn:
            return best[1]
        return u


def _default_init(N):
    return lambda t: t * np.exp(-0.5 * (N - 1) * t)


def _initial_coeffs(V, init, N):
    if init is None:
        init = _default_init(N)
    return V.interpolate(init)


def _minimize(prob, c0, opts, fault=None):
    c = prob.normalize(c0)
    it = 0
    pg, mu = prob.stationarity(c)
    history = [mu]
    newton_tried = False
    while pg >= opts.tol:
        if it >= opts.max_iter:
            raise ConvergenceError(
                f"quotient iteration stalled after {it} steps (stationarity {pg:.2e} > {opts.tol:.1e})")
        if opts.newton and pg < opts.newton_switch and not newton_tried:
            newton_tried = True
            c_abs = np.abs(c)
            u = prob.newton(mu ** (1.0 / (prob.q - 2.0)) * c_abs, opts.newton_max)
            cand = prob.normalize(u)
            pg_c, mu_c = prob.stationarity(cand)
            if mu_c <= mu * (1 + 1e-9) and pg_c < pg:
                c, pg, mu = cand, pg_c, mu_c
                history.append(mu)
                it += 1
                continue
            log.debug("newton polish rejected (mu %.3e -> %.3e)", mu, mu_c)
        x = prob.solve(prob.g(c))
        c = prob.normalize(x)
        if it == 0 or (pg < 10 * opts.newton_switch and newton_tried is False):
            c = np.abs(c)
        pg, mu = prob.stationarity(c)
        history.append(mu)
        it += 1
        if fault == "nonconverge":
            pg = max(pg, 1.0)
    return mu, c, it, pg, history


def minimize_quotient(params, grid, init=None, opts=None):
    """Minimize ``||v||^2`` subject to ``int d^beta |v|^q = 1``; returns ``(mu, v)``."""
    ensure_valid(params, "solve")
    opts = opts or SolveOptions()
    prob = _Problem(grid, params.N, params.alpha, params.beta, params.lam, params.q)
    c0 = _initial_coeffs(prob.V, init if init is not None else opts.init, params.N)
    mu, c, _, _, _ = _minimize(prob, c0, opts)
    return mu, prob.V.function(c, params.N, bounded=opts.domain == "ball")


def descend_quotient(grid, N, alpha, beta, q, lam=0.0, iters=200, init=None, bounded=True):
    """Run ``iters`` inverse-iteration steps without a convergence requirement.

    Used for critical exponents, where minimizing sequences may concentrate
    and no minimizer need exist.  Returns ``(history, v)``; ``history`` is
    nonincreasing.
    """
    prob = _Problem(grid, N, alpha, beta, lam, q)
    c = prob.normalize(_initial_coeffs(prob.V, init, N))
    hist = [prob.energy(c)]
    for _ in range(iters):
        c = np.abs(prob.normalize(prob.solve(prob.g(c))))
        hist.append(prob.energy(c))
    return hist, prob.V.function(c, N, bounded=bounded)


def scale_to_solution(v, mu, q):
    """``u = mu^(1/(q-2)) v``; turns a normalized critical point into a solution."""
    if not q > 2:
        raise ValueError("q must exceed 2")
    return v * mu ** (1.0 / (q - 2.0))


def tail_fraction(u, params, frac=0.1):
    """Share of ``||u||^2 + int d^beta|u|^q`` carried by ``t > (1 - frac) T_max``."""
    grid = u.grid
    cut = (1.0 - frac) * grid.T_max
    total = outer = 0.0
    for gamma, vals in ((params.alpha, u.derivs ** 2), (params.beta, np.abs(u.values) ** params.q)):
        rule = grid.weighted_rule(gamma, u.N)
        f = rule.weights * rule.sample(vals)
        total += f.sum()
        outer += f[rule.nodes > cut].sum()
    return float(outer / total) if total > 0 else 0.0


def solve_ground_state(params, grid, opts=None, *, fault=None):
    """Positive ground state on ``grid``; see module docstring."""
    ensure_valid(params, "solve")
    opts = opts or SolveOptions()
    ball = opts.domain == "ball"
    attempts = 0 if ball else max(0, opts.adapt_tmax)
    for attempt in range(attempts + 1):
        prob = _Problem(grid, params.N, params.alpha, params.beta, params.lam, params.q)
        init = opts.init
        if attempt and isinstance(init, RadialFn):
            init = None
        c0 = _initial_coeffs(prob.V, init, params.N)
        mu, c, iters, pg, hist = _minimize(prob, c0, opts, fault=fault)
        v = prob.V.function(c, params.N, bounded=True)
        u = scale_to_solution(v, mu, params.q)
        tf = 0.0 if ball else tail_fraction(u, params)
        if tf <= opts.tail_tol:
            break
        if attempt == attempts:
            raise TailError(f"solution carries {tf:.2e} of its energy near T_max={grid.T_max:g}; raise T_max")
        log.info("tail fraction %.2e at T_max=%g, retrying with a larger radius", tf, grid.T_max)
        g = grid.grading
        grid = build_grid(int(grid.n * 1.25) // grid.order * grid.order, 1.25 * grid.T_max, g)
    u = u.with_bounded(ball)
    res = weak_residual(u, params)
    gap = nehari_gap(u, params)
    pos = bool(np.min(u.values) > 0)
    mono = bool(np.all(np.diff(u.values) <= 1e-12 * np.max(np.abs(u.values))))
    if params.alpha == 0 and params.beta == 0 and params.lam == 0 and not mono:
        log.warning("ground state is not monotone in t")
    converged = pg < opts.tol and res < opts.residual_tol and fault != "nonconverge"
    history_ok = all(b <= a * (1 + 1e-9) for a, b in zip(hist, hist[1:]))
    return SolveResult(
        u=u, quotient=mu, residual=res, method="nehari", iterations=iters,
        converged=converged, positivity_ok=pos, nehari_gap=gap, stationarity=pg,
        energy=energy_I(u, params), monotone=mono, tail_fraction=tf, T_max=grid.T_max,
        extra={"quotient_history_monotone": history_ok},
    )


def grid_stability(params, grid, opts=None):
    """Relative change of ``mu`` under doubling ``n`` and under ``T_max * 1.25``."""
    opts = opts or SolveOptions()
    base = solve_ground_state(params, grid, opts).quotient
    fine = solve_ground_state(params, refine(grid), opts).quotient
    n_wide = int(grid.n * 1.25) // grid.order * grid.order
    wide = solve_ground_state(params, build_grid(n_wide, 1.25 * grid.T_max, grid.grading), opts).quotient
    return max(abs(fine - base), abs(wide - base)) / base


# ---------------------------------------------------------------------------
# shooting


@dataclass(frozen=True)
class ShootOptions:
    eps: float = 1e-6
    rtol: float = 1e-12
    atol: float = 1e-14
    tol: float = 1e-8  # |first zero - T|
    t_cap: float = None  # default 20 T
    max_bisect: int = 200
    s_init: float = 1.0
    n: int = 512
    use_numba: object = None


@dataclass
class ShootResult:
    s0: float
    u: RadialFn
    t_zero: float
    iterations: int
    history: list

    def to_dict(self):
        return {"s0": self.s0, "t_zero": self.t_zero, "iterations": self.iterations, "method": "shooting"}


def _hardy_exponent(N, alpha, lam):
    k = N - 2.0 + alpha
    return 0.5 * (-k + math.sqrt(k * k - 4.0 * lam))


def _taylor_start(params, s0, eps):
    N, a, b, lam, q = params.N, params.alpha, params.beta, params.lam, params.q
    if lam == 0:
        k = b - a + 2.0
        c = s0 ** (q - 1.0) / (k * (b + N))
        return s0 - c * eps ** k, -c * k * eps ** (k - 1.0)
    sig = _hardy_exponent(N, a, lam)
    return s0 * eps ** sig, sig * s0 * eps ** (sig - 1.0)


def _first_zero(params, s0, t_cap, opts):
    u0, v0 = _taylor_start(params, s0, opts.eps)
    st, tz, *_ = integrate_radial(opts.eps, u0, v0, t_cap, params.N, params.alpha, params.beta,
                                  params.lam, params.q, rtol=opts.rtol, atol=opts.atol,
                                  stop_at_zero=True, use_numba=opts.use_numba)
    if st == HIT_ZERO:
        return tz
    if st == REACHED_END:
        return math.inf
    raise ShootingError(f"integration failed (status {st}) for s0={s0:g}")


def shoot_ball(params, T, s0, opts=None, grid=None):
    """Trajectory of the radial ODE from ``u(0+) = s0`` sampled on a grid over ``[0, T]``."""
    ensure_valid(params, "solve")
    opts = opts or ShootOptions()
    if not T > 0 or not s0 > 0:
        raise ValueError("need T > 0 and s0 > 0")
    grid = grid or build_grid(opts.n, T)
    t = grid.nodes
    eps = opts.eps
    U = np.empty(t.size)
    V = np.empty(t.size)
    small = t <= eps
    if small.any():
        for i in np.flatnonzero(small):
            U[i], V[i] = _taylor_start(params, s0, t[i])
    u0, v0 = _taylor_start(params, s0, eps)
    st, _, _, _, _, Uo, Vo = integrate_radial(
        eps, u0, v0, grid.T_max, params.N, params.alpha, params.beta, params.lam, params.q,
        rtol=opts.rtol, atol=opts.atol, t_out=t[~small], stop_at_zero=False, use_numba=opts.use_numba)
    if st != REACHED_END or not np.all(np.isfinite(Uo)):
        raise ShootingError(f"integration failed (status {st}) for s0={s0:g}")
    U[~small], V[~small] = Uo, Vo
    return RadialFn(grid, U, V, N=params.N, bounded=True)


def shoot_dirichlet(params, T, opts=None, grid=None):
    """Bisect on ``s0`` until the first zero of ``u`` sits at ``T`` (within ``opts.tol``)."""
    ensure_valid(params, "solve")
    opts = opts or ShootOptions()
    t_cap = opts.t_cap or 20.0 * T
    hist = []

    def zero(s):
        z = _first_zero(params, s, t_cap, opts)
        hist.append((s, z))
        return z

    s = opts.s_init
    z = zero(s)
    if z > T:
        lo = s
        for _ in range(200):
            s *= 2.0
            z = zero(s)
            if z <= T:
                break
        else:
            raise ShootingError(f"no sign change before t_cap={t_cap:g}; shooting value too small")
        hi = s
    else:
        hi = s
        for _ in range(200):
            s *= 0.5
            z = zero(s)
            if z > T:
                break
        else:
            raise ShootingError("first zero stays below T for all tried shooting values")
        lo = s
    it = 0
    s_mid, z_mid = (lo, hist[-1][1]) if abs(hist[-1][1] - T) < opts.tol else (None, None)
    while s_mid is None or abs(z_mid - T) >= opts.tol:
        if it >= opts.max_bisect:
            raise ShootingError(f"bisection did not reach |t0 - T| < {opts.tol:g}")
        s_mid = math.sqrt(lo * hi) if hi / lo > 4 else 0.5 * (lo + hi)
        z_mid = zero(s_mid)
        if z_mid > T:
            lo = s_mid
        else:
            hi = s_mid
        it += 1
        if hi - lo <= 4e-16 * hi:
            break
    u = shoot_ball(params, T, s_mid, opts, grid=grid)
    return ShootResult(s_mid, u, z_mid, it, hist)


def relative_l2_distance(u, v):
    """``||u - v||_{L^2(dV)} / ||v||_{L^2(dV)}`` on a shared grid."""
    d = u - v
    return math.sqrt(lq_weighted(d, 0.0, 2.0) / lq_weighted(v, 0.0, 2.0))


# ---------------------------------------------------------------------------
# mountain-pass geometry


def mountain_pass_profile(u, params, t_samples):
    """Rows ``(s, I(s u))`` for ``s`` in ``t_samples``; exact on the quadratic/power fiber."""
    norm = shifted_norm_sq(u, params.alpha, params.lam)
    lq = lq_weighted(u, params.beta, params.q)
    s = np.asarray(t_samples, dtype=float)
    vals = 0.5 * s * s * norm - np.abs(s) ** params.q * lq / params.q
    return np.column_stack([s, vals])


def mountain_pass_summary(u, params):
    """Fiber maximizer, sign-change root, and the two geometric conditions."""
    norm = shifted_norm_sq(u, params.alpha, params.lam)
    lq = lq_weighted(u, params.beta, params.q)
    if not (norm > 0 and lq > 0):
        raise DegenerateError("mountain-pass profile needs u != 0")
    q = params.q
    t_star = (norm / lq) ** (1.0 / (q - 2.0))
    root = (q * norm / (2.0 * lq)) ** (1.0 / (q - 2.0))
    prof = mountain_pass_profile(u, params, [0.5 * t_star, 2.0 * root])
    return {
        "t_star": t_star,
        "root": root,
        "peak": 0.5 * t_star ** 2 * norm - t_star ** q * lq / q,
        "small_sphere_positive": bool(prof[0, 1] > 0),
        "far_negative": bool(prof[1, 1] < 0),
        "hardy_margin": 1.0 - params.lam / hardy_constant(params.N, params.alpha),
    }
