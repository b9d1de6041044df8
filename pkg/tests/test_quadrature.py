import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from hypckn.errors import GridError, TailWarning
from hypckn.quadrature import (
    Grading,
    RadialFn,
    build_grid,
    integrate_weighted,
    read_profile_csv,
    refine,
)


def test_polynomial_exactness():
    g = build_grid(256, 8.0)
    assert g.integrate(lambda t: t ** 2) == pytest.approx(512 / 3, rel=1e-12)


def test_decaying_integrand_against_adaptive_reference():
    g = build_grid(512, 40.0)
    ref = 4 * math.pi * quad(lambda t: math.exp(-3 * t) * math.sinh(t) ** 2, 0, 40, epsabs=0, epsrel=1e-13, limit=200)[0]
    val = integrate_weighted(lambda t: np.exp(-3 * t), 0.0, g, 3)
    assert val == pytest.approx(ref, rel=1e-10)


def test_divergent_integrand_warns():
    g = build_grid(256, 40.0)
    with pytest.warns(TailWarning):
        integrate_weighted(lambda t: np.exp(-2 * t), 0.0, g, 3)


def test_geodesic_ball_volume():
    g = build_grid(256, 1.0)
    vol = integrate_weighted(lambda t: np.ones_like(t), 0.0, g, 3, check_tail=False)
    assert vol == pytest.approx(math.pi * (math.sinh(2) - 2), rel=1e-12)
    # t^-1 * t = 1 through the singular weight
    vol2 = integrate_weighted(lambda t: t, -1.0, g, 3, check_tail=False)
    assert vol2 == pytest.approx(vol, rel=1e-12)


@pytest.mark.parametrize("N", [3, 4, 6])
def test_euclidean_limit(N):
    T = 1e-3
    g = build_grid(64, T)
    om = 2 * math.pi ** (N / 2) / math.gamma(N / 2)
    vol = integrate_weighted(lambda t: np.ones_like(t), 0.0, g, N, check_tail=False)
    assert vol == pytest.approx(om * T ** N / N, rel=1e-5)


@pytest.mark.parametrize("gamma", [-2.5, -1.0, 0.0, 1.5])
def test_singular_weights(gamma):
    N = 3
    g = build_grid(256, 2.0)
    f = lambda t: np.cos(t)
    ref = 4 * math.pi * quad(lambda t: math.cos(t) * (math.sinh(t) / t) ** 2 if t > 0 else 1.0, 0, 2, weight="alg",
                             wvar=(gamma + 2, 0), epsabs=0, epsrel=1e-13)[0]
    assert integrate_weighted(f, gamma, g, N, check_tail=False) == pytest.approx(ref, rel=1e-10)


def test_refinement_order():
    f = lambda t: np.exp(-t) * np.sin(3 * t)
    exact = 4 * math.pi * quad(lambda t: math.exp(-t) * math.sin(3 * t) * math.sinh(t) ** 2, 0, 4, epsabs=0, epsrel=1e-13)[0]
    errs = []
    for n in (16, 32, 64):
        g = build_grid(n, 4.0, Grading(kind="uniform", order=4))
        errs.append(abs(integrate_weighted(f, 0.0, g, 3, check_tail=False) - exact))
    slope = math.log2(errs[0] / errs[1]), math.log2(errs[1] / errs[2])
    # order-4 Gauss rules on equal panels: error ~ h^8
    assert min(slope) > 6.5


def test_grading_parse_roundtrip():
    g = Grading.parse("geometric:ratio=0.4,layers=10,order=6")
    assert (g.kind, g.ratio, g.layers, g.order) == ("geometric", 0.4, 10, 6)
    assert Grading.parse(g.describe()) == g
    assert Grading.parse(None) == Grading()


def test_bad_grid_rejected():
    with pytest.raises(GridError):
        build_grid(0, 1.0)
    with pytest.raises(GridError):
        build_grid(64, -1.0)


def test_refine_doubles_nodes():
    g = build_grid(64, 2.0)
    assert refine(g).n == 2 * g.n


def test_radialfn_csv_roundtrip(tmp_path):
    g = build_grid(128, 5.0)
    u = RadialFn.from_callable(g, lambda t: np.exp(-t * t))
    path = tmp_path / "u.csv"
    u.to_csv(path)
    assert path.read_text().startswith("# schema=1\nt,u\n")
    t, vals = read_profile_csv(path)
    assert np.array_equal(vals, u.values)
    v = RadialFn.from_csv(path, build_grid(96, 5.0))
    assert np.max(np.abs(v.values - np.exp(-v.grid.nodes ** 2))) < 1e-6


def test_radialfn_arithmetic_and_eval():
    g = build_grid(128, 3.0)
    u = RadialFn.from_callable(g, lambda t: np.cos(t))
    w = 2.0 * u - u
    assert np.allclose(w.values, u.values)
    assert u.eval(1.234) == pytest.approx(math.cos(1.234), abs=1e-10)
    assert u.deriv_at(1.234) == pytest.approx(-math.sin(1.234), abs=1e-8)
    assert np.all((-u).abs().values >= 0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(-1.5, 2.0))
def test_exponential_weights_property(c, gamma):
    # int_0^T t^gamma e^{-ct} sinh^2 t dt against scipy with the algebraic weight
    T = 6.0
    g = build_grid(256, T)
    ref = 4 * math.pi * quad(lambda t: math.exp(-c * t) * (math.sinh(t) / t) ** 2 if t > 0 else math.exp(-c * t),
                             0, T, weight="alg", wvar=(gamma + 2, 0), epsabs=0, epsrel=1e-13)[0]
    val = integrate_weighted(lambda t: np.exp(-c * t), gamma, g, 3, check_tail=False)
    assert val == pytest.approx(ref, rel=1e-9)
