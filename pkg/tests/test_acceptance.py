"""Acceptance suite: one numbered criterion per test, one PASS/FAIL line each.

Run standalone with ``python3 tests/test_acceptance.py`` or through pytest
(the lines are printed even when output capture is on).
"""

import math
import sys
import time
import warnings

import numpy as np
import pytest

from hypckn.checks import check_cov, check_geometry, check_volume_factors, check_spectral, coordinate_consistency
from hypckn.checks import _hardy_samples
from hypckn.errors import TailWarning
from hypckn.functionals import hardy_infimum, hardy_quotient
from hypckn.geometry import Params, hardy_constant
from hypckn.pohozaev import (
    BallDomain,
    ball_solution_params,
    concentrating_quotients,
    euclidean_bubble_quotient,
    pohozaev_report,
    supercritical_probe,
)
from hypckn.quadrature import build_grid, integrate_weighted
from hypckn.solver import SolveOptions, grid_stability, relative_l2_distance, shoot_dirichlet, solve_ground_state

_emit = print


def verdict(num, name, ok, detail, elapsed, limit):
    ok = bool(ok) and elapsed < limit
    _emit(f"{'PASS' if ok else 'FAIL'} [{num:2d}] {name}: {detail} ({elapsed:.2f}s < {limit:g}s)")
    return ok


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def crit_01():
    r, dt = timed(check_geometry)
    return verdict(1, "geometry exactness", r.passed, f"worst={r.worst:.1e}", dt, 1.0)


def crit_02():
    def run():
        g = build_grid(256, 1.0)
        vol = integrate_weighted(lambda t: np.ones_like(t), 0.0, g, 3, check_tail=False)
        exact = math.pi * (math.sinh(2.0) - 2.0)
        return abs(vol - exact) / exact, coordinate_consistency()

    (err, cc), dt = timed(run)
    return verdict(2, "ball volume and coordinate consistency", err < 1e-8 and cc < 1e-8,
                   f"volume_rel={err:.1e} t_vs_r={cc:.1e}", dt, 5.0)


def _hardy(alpha):
    def run():
        grid = build_grid(512, 40.0)
        C = hardy_constant(3, alpha)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TailWarning)
            qmin = min(hardy_quotient(u, alpha) for u in _hardy_samples(grid, 3))
        mu, _ = hardy_infimum(3, alpha)
        return C, qmin, mu

    (C, qmin, mu), dt = timed(run)
    ok = qmin >= C * (1 - 1e-6) and mu <= 1.02 * C
    return ok, f"alpha={alpha:g}: min_sample={qmin:.4f} infimum={mu:.5f} vs {C:g}", dt


def crit_03():
    oks = []
    for alpha in (0.0, 1.0):
        ok, detail, dt = _hardy(alpha)
        oks.append(verdict(3, "Hardy sharpness", ok, detail, dt, 30.0))
    return all(oks)


def crit_04():
    r, dt = timed(check_spectral)
    return verdict(4, "spectral floor", r.passed, r.detail, dt, 30.0)


def crit_05():
    r, dt = timed(check_cov)
    return verdict(5, "change of variables", r.passed, f"worst={r.worst:.1e} over 20 samples", dt, 30.0)


def _cell(P):
    def run():
        grid = build_grid(512, 40.0)
        res = solve_ground_state(P, grid)
        stab = grid_stability(P, build_grid(256, 40.0))
        return res, stab

    (res, stab), dt = timed(run)
    ok = (res.converged and res.positivity_ok and res.residual < 1e-6 and res.nehari_gap < 1e-8
          and stab < 0.01)
    detail = (f"mu={res.quotient:.6f} residual={res.residual:.1e} nehari={res.nehari_gap:.1e} "
              f"min_u={np.min(res.u.values):.1e} grid_change={stab:.1e}")
    return ok, detail, dt


def crit_06():
    oks = []
    for label, P in (("classical", Params(N=3, alpha=0.0, beta=0.0, lam=0.0, q=4.0)),
                     ("weighted", Params(N=3, alpha=1.0, beta=0.5, lam=0.5, q=2.5))):
        ok, detail, dt = _cell(P)
        oks.append(verdict(6, f"ground state ({label})", ok, detail, dt, 120.0))
    return all(oks)


def crit_07():
    def run():
        P = Params(N=3, q=4.0)
        g = build_grid(512, 3.0)
        fe = solve_ground_state(P, g, SolveOptions(domain="ball"))
        sh = shoot_dirichlet(P, 3.0, grid=g)
        return relative_l2_distance(sh.u, fe.u)

    d, dt = timed(run)
    return verdict(7, "shooting vs minimization", d < 1e-4, f"relative_L2={d:.1e}", dt, 120.0)


def crit_08():
    def run():
        P = ball_solution_params()
        dom = BallDomain(1.0)
        out = []
        for n in (16, 32, 64):
            fe = solve_ground_state(P, build_grid(n, 1.0), SolveOptions(domain="ball"))
            out.append(pohozaev_report(fe.u, dom, P).residual)
        return out

    res, dt = timed(run)
    ok = res[-1] < 1e-2 and all(b < a for a, b in zip(res, res[1:]))
    return verdict(8, "Pohozaev identity", ok, "residuals " + " > ".join(f"{x:.1e}" for x in res), dt, 120.0)


def crit_09():
    r, dt = timed(check_volume_factors)
    return verdict(9, "volume-factor positivity", r.passed, f"min>= -{r.worst:.1e}; {r.detail}", dt, 10.0)


def crit_10():
    def run():
        oracle = euclidean_bubble_quotient(3)
        fam = concentrating_quotients(Params(N=3, p=6.0), BallDomain(1.0), 8, profile="bubble")
        return oracle, min(fam.quotients)

    (oracle, est), dt = timed(run)
    rel = abs(est - oracle) / oracle
    return verdict(10, "Sobolev constant oracle", rel < 0.05,
                   f"family={est:.4f} oracle={oracle:.4f} rel={rel:.2%}", dt, 120.0)


def crit_11():
    def run():
        dom = BallDomain(1.0)
        return (supercritical_probe(Params(N=3, p=7.0), dom, 12),
                supercritical_probe(Params(N=3, p=4.0), dom, 12))

    (sup, sub), dt = timed(run)
    ok = sup.tail_decreasing(5, 0.95) and sub.increasing()
    detail = (f"p=7 last ratios {max(sup.ratios[-5:]):.3f}max; "
              f"p=4 ratios {min(sub.ratios):.3f}min")
    return verdict(11, "supercritical collapse", ok, detail, dt, 60.0)


CRITERIA = [crit_01, crit_02, crit_03, crit_04, crit_05, crit_06, crit_07, crit_08, crit_09, crit_10, crit_11]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i + 1:02d}" for i in range(len(CRITERIA))])
def test_criterion(criterion, capsys):
    global _emit
    with capsys.disabled():
        _emit = lambda s: print("\n" + s)
        try:
            assert criterion()
        finally:
            _emit = print


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria passed")
    sys.exit(0 if all(results) else 1)
