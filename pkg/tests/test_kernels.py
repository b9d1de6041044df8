import os
import subprocess
import sys

import numpy as np
import pytest

from hypckn.kernels import HIT_ZERO, REACHED_END, integrate_radial, scan_factors


@pytest.mark.parametrize("params", [(3, 0.0, 0.0, 6.0), (3, 1.0, 0.5, 7.0), (4, 2.0, 1.0, 5.0)])
def test_scan_backends_agree(params):
    r = np.linspace(1e-5, 0.999, 2000)
    a = scan_factors(r, *params, use_numba=True)
    b = scan_factors(r, *params, use_numba=False)
    for x, y in zip(a, b):
        assert np.allclose(x, y, rtol=1e-10, atol=1e-13)


def test_ode_backends_agree():
    t_out = np.linspace(0.1, 2.0, 20)
    a = integrate_radial(1e-6, 2.0, 0.0, 2.0, 3, 0.0, 0.0, 0.0, 4.0, t_out=t_out, use_numba=True)
    b = integrate_radial(1e-6, 2.0, 0.0, 2.0, 3, 0.0, 0.0, 0.0, 4.0, t_out=t_out, use_numba=False)
    assert a[0] == b[0] == REACHED_END
    assert np.allclose(a[5], b[5], rtol=1e-8)


def test_ode_detects_zero():
    status, tz, *_ = integrate_radial(1e-6, 6.0, 0.0, 20.0, 3, 0.0, 0.0, 0.0, 4.0, stop_at_zero=True)
    assert status == HIT_ZERO and 0 < tz < 20


def test_numba_can_be_disabled_by_environment():
    code = ("import hypckn._accel as a, hypckn.kernels as k, numpy as np;"
            "print(a.USE_NUMBA, k.scan_factors(np.array([0.5]), 3, 0.0, 0.0, 8.0)[0][0])")
    env = dict(os.environ, HYPCKN_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    flag, val = out.stdout.split()
    assert flag == "False"
    assert float(val) == pytest.approx((0.5 - 3 / 8) * (1 + 2 / 3), rel=1e-12)
