import numpy as np
import pytest

from hypckn.errors import DomainError, PohozaevError, ValidationError
from hypckn.geometry import Params, geom_factors
from hypckn.pohozaev import (
    BallDomain,
    ball_solution_params,
    bochner_residual,
    bracket2,
    concentrating_quotients,
    euclidean_bubble_quotient,
    forcing_bound,
    laplacian_factor,
    laplacian_factor_fd,
    pohozaev_report,
    scan,
    sobolev_constant_exact,
    supercritical_probe,
    write_scan_csv,
)
from hypckn.quadrature import RadialFn, build_grid
from hypckn.solver import SolveOptions, shoot_dirichlet, solve_ground_state

DOM = BallDomain(1.0)
P4 = ball_solution_params()


def test_bracket_values():
    r = np.linspace(1e-4, 1 - 1e-6, 10_000)
    assert np.max(np.abs(bracket2(Params(N=3, p=6.0), r))) <= 1e-14
    assert bracket2(Params(N=3, p=8.0), 0.5) == pytest.approx((0.5 - 3 / 8) * (1 + 2 / 3), rel=1e-13)
    assert bracket2(Params(N=3, p=5.0), 0.999) < 0


def test_laplacian_factor_beta_zero():
    P = Params(N=3, alpha=0.0, beta=0.0, p=6.0)
    r = 0.4
    g = geom_factors(r)
    expected = 3 * g.rho ** 3 * (3 + 3 * g.rho * r * r)
    assert laplacian_factor(P, r) == pytest.approx(expected, rel=1e-12)


def test_laplacian_factor_fd():
    P = Params(N=3, alpha=0.0, beta=-1.0, p=6.0)
    v = laplacian_factor(P, 0.5)
    assert v > 0
    assert v == pytest.approx(laplacian_factor_fd(P, 0.5), rel=1e-4)


@pytest.mark.parametrize("beta", [-2.999, -2.5, -1.0, 0.0, 2.0])
def test_laplacian_scan_nonnegative(beta):
    _, _, lap = scan(Params(N=3, alpha=0.0, beta=beta, p=6.0 + max(beta, 0)))
    assert lap.min() >= -1e-10


def test_scan_csv(tmp_path):
    r, br, lap = scan(Params(N=3, p=7.0), n=50)
    write_scan_csv(tmp_path / "s.csv", r, br, lap)
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "# schema=1" and lines[1] == "r,bracket2,laplacian_factor" and len(lines) == 52


def test_identity_on_shooting_solution():
    sh = shoot_dirichlet(P4, 1.0, grid=build_grid(512, 1.0))
    rep = pohozaev_report(sh.u, DOM, P4)
    assert rep.residual < 1e-2
    assert rep.cross_agreement < 1e-6
    assert rep.boundary_term < 0
    assert rep.to_dict()["boundary_term_r"] == pytest.approx(rep.boundary_term, rel=1e-6)


def test_identity_refines():
    res = []
    for n in (16, 32, 64):
        fe = solve_ground_state(P4, build_grid(n, 1.0), SolveOptions(domain="ball"))
        res.append(pohozaev_report(fe.u, DOM, P4).residual)
    assert res[0] > res[1] > res[2] and res[-1] < 1e-2


def test_identity_fails_off_solutions():
    bump = RadialFn.from_callable(build_grid(256, 1.0), lambda t: np.cos(np.pi * t / 2), bounded=True)
    assert pohozaev_report(bump, DOM, P4).residual > 0.1


def test_zero_function_report():
    z = RadialFn.from_callable(build_grid(64, 1.0), lambda t: 0 * t, bounded=True)
    rep = pohozaev_report(z, DOM, P4)
    assert rep.residual == 0 and rep.boundary_term == 0


def test_report_rejects_non_dirichlet_and_wrong_radius():
    u = RadialFn.from_callable(build_grid(64, 1.0), lambda t: 1 + 0 * t, bounded=True)
    with pytest.raises(PohozaevError):
        pohozaev_report(u, DOM, P4)
    with pytest.raises(PohozaevError):
        pohozaev_report(u, BallDomain(2.0), P4)


def test_forcing_bound_needs_positive_bracket():
    sh = shoot_dirichlet(P4, 1.0)
    rep = pohozaev_report(sh.u, DOM, P4)
    # p=4 < 2*: bracket changes sign, so no forcing bound
    with pytest.raises(Exception):
        forcing_bound(rep)


def test_ball_domain():
    assert BallDomain(1.0).R_e == pytest.approx(np.tanh(0.5))
    with pytest.raises(DomainError):
        BallDomain(0.0)


def test_bochner():
    assert bochner_residual(lambda r: np.exp(-r * r) * np.cos(r), 0.4) < 1e-6


def test_probe_regimes():
    sup = supercritical_probe(Params(N=3, p=7.0), DOM, 12)
    assert sup.regime == "supercritical" and sup.tail_decreasing()
    assert sup.scaling_exponent == pytest.approx(1 - 6 / 7)
    sub = concentrating_quotients(Params(N=3, p=4.0), DOM, 12)
    assert sub.regime == "subcritical" and sub.increasing()
    crit = concentrating_quotients(Params(N=3, p=6.0), DOM, 8, profile="bubble")
    q = np.array(crit.quotients)
    assert np.all(np.isfinite(q)) and q.min() > 0 and abs(q[-1] / q[-2] - 1) < 1e-5


def test_probe_validates():
    with pytest.raises(ValidationError):
        supercritical_probe(Params(N=3, alpha=0.0, beta=-3.0, p=7.0), DOM)


def test_sobolev_oracle():
    assert euclidean_bubble_quotient(3) == pytest.approx(sobolev_constant_exact(3), rel=1e-10)
    assert sobolev_constant_exact(3) == pytest.approx(5.4779, abs=1e-4)
