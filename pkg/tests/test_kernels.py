import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from potential_regions import _backend, _fallback
from potential_regions.errors import (InvalidParameterError, NumericalFailureError,
                                      OutOfRangeError)
from potential_regions.kernels import (GaugeFunction, PoissonParams, RadialKernel, central_mass,
                                       convolve_poisson_kernel, eval_poisson, gauge_from_kernel,
                                       log_grid, smoothed_kernel)

mp.mp.dps = 30


def mp_potential(y, t, beta=0.5, R=1.0):
    """(P_t * K)(y) for K = |x|^-beta on [-R, R], by mpmath with breakpoints."""
    y, t, b = mp.mpf(y), mp.mpf(t), mp.mpf(beta)

    def f(z):
        return abs(z) ** -b * t / (mp.pi * (t * t + (y - z) ** 2))

    pts = {-R, 0, R, y}
    for k in (1, 10, 100, 1e3, 1e4, 1e6):
        pts |= {y - k * t, y + k * t}
    pts = sorted(p for p in pts if -R <= p <= R)
    return mp.quad(f, pts, maxdegree=12)


def test_poisson_closed_form():
    t = 0.3
    x = np.array([0.0, 0.1, -2.0, 50.0])
    np.testing.assert_allclose(eval_poisson(t, x), t / (np.pi * (t * t + x * x)), rtol=1e-15)
    assert eval_poisson(PoissonParams(2.0), 0.0) == pytest.approx(1 / (2 * np.pi))


@pytest.mark.parametrize("t", [0.0, -1.0, math.inf, math.nan])
def test_poisson_rejects_bad_height(t):
    with pytest.raises(InvalidParameterError):
        PoissonParams(t)


@pytest.mark.parametrize("t,h", [(1e-3, 1e-5), (1e-3, 0.2), (1e-12, 1e-14)])
def test_box_poisson_mass(t, h):
    def q(x):
        return mp.atan2(2 * h * t, t * t + x * x - h * h) / (2 * mp.pi * h)

    # total mass 1 on the line, and the backend integrates like the mpmath form
    edges = [-h - t, -h, 0.0, h, h + t]
    assert float(mp.quad(q, [-mp.inf] + edges + [mp.inf])) == pytest.approx(1.0, abs=1e-12)
    L = h + 1e3 * t
    ref = float(mp.quad(q, [-L] + edges + [L]))
    f = lambda x: float(_fallback.box_poisson(np.array([x]), t, h)[0])
    val = sum(integrate.quad(f, a, b, limit=200, epsabs=0, epsrel=1e-12)[0]
              for a, b in zip([-L] + edges, edges + [L]))
    assert val == pytest.approx(ref, rel=1e-10)


@given(st.floats(1e-12, 1e3), st.floats(0.0, 1.0), st.floats(-1e3, 1e3))
def test_box_poisson_symmetric_positive(t, hrel, x):
    h = hrel * t * 10
    a = _fallback.box_poisson(np.array([x, -x]), t, h)
    assert a[0] > 0 or abs(x) > 1e200
    assert a[0] == pytest.approx(a[1], rel=1e-14)


def test_box_poisson_limit_h_to_zero():
    x = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(_fallback.box_poisson(x, 0.7, 1e-9),
                               _fallback.box_poisson(x, 0.7, 0.0), rtol=1e-12)


@pytest.mark.parametrize("y,t", [(0.0, 1e-4), (3e-4, 1e-4), (0.3, 1e-2), (0.999, 1e-3),
                                 (2.0, 0.5), (1e-9, 1e-19), (1e-12, 1.77636e-19)])
def test_smoothed_kernel_against_mpmath(K, y, t):
    val, _ = smoothed_kernel(K, t, 0.0, np.array([y]), 1e-300, 1e-10)
    assert val[0] == pytest.approx(float(mp_potential(y, t)), rel=2e-10)


def test_backends_agree(K):
    if _backend.compiled is None:
        pytest.skip("compiled kernels not built")
    for t in (1e-4, 1e-60, 1e-150):
        for h in (0.0, 0.01 * t, 10 * t):
            ys = np.array([0.0, t, 10 * t, 1e-3, 0.3, 0.9999, 1.0, 2.5])
            a = _backend.compiled.smoothed_potential(ys, t, h, 0.5, 1.0, 1e-300, 1e-10, 10**6)
            b = _fallback.smoothed_potential(ys, t, h, 0.5, 1.0, 1e-300, 1e-10, 10**6)
            np.testing.assert_allclose(a[0], b[0], rtol=1e-13)
            assert not a[3].any() and not b[3].any()


def test_central_mass_matches_kernel_mass(K):
    # all of K's mass sits in [-2, 2] up to the Poisson tail
    t = 1e-6
    tail = 2 * K.l1_mass * math.atan(t / 1.0) / math.pi
    assert central_mass(K, t, 2.0) == pytest.approx(K.l1_mass, abs=2 * tail + 1e-10)


def test_semigroup_on_kernel(K):
    # P_s * (P_t * K) = P_{s+t} * K
    s, t = 0.02, 0.03
    for x in (0.0, 0.05, 0.7):
        def inner(z):
            return eval_poisson(s, x - z) * convolve_poisson_kernel(t, K, z, 1e-12, 1e-10)
        cuts = [-np.inf, -1.0, min(x, 0.0), max(x, 0.0) + 1e-9, 1.0, np.inf]
        lhs = sum(integrate.quad(inner, a, b, limit=500, epsrel=1e-10)[0]
                  for a, b in zip(cuts[:-1], cuts[1:]))
        assert lhs == pytest.approx(convolve_poisson_kernel(s + t, K, x, 1e-12, 1e-10), rel=1e-6)


def test_budget_exhaustion_reports_failure(K):
    with pytest.raises(NumericalFailureError) as err:
        smoothed_kernel(K, 1e-3, 0.0, np.array([0.5]), 1e-300, 1e-15, max_evals=60)
    assert err.value.residual >= 0


def test_radial_kernel_validation():
    with pytest.raises(InvalidParameterError):
        RadialKernel.power_law(1.5)
    with pytest.raises(InvalidParameterError):
        RadialKernel.power_law(0.5, support_radius=0.0)
    with pytest.raises(InvalidParameterError):
        RadialKernel("weird")
    K = RadialKernel.power_law(0.5)
    assert K.l1_mass == pytest.approx(4.0)
    assert K.integral(0.25, 1.0) == pytest.approx(1.0)
    assert RadialKernel.from_dict(K.to_dict()) == K


def test_custom_kernel_matches_power_law():
    K = RadialKernel.power_law(0.5)
    C = RadialKernel.custom(lambda r: r ** -0.5, 1.0)
    xs = np.array([0.0, 0.01, 0.4])
    a, _ = smoothed_kernel(K, 0.05, 0.0, xs)
    b, _ = smoothed_kernel(C, 0.05, 0.0, xs)
    np.testing.assert_allclose(a, b, rtol=1e-5)


def test_gauge_asymptotics(rK):
    # P_t * K at 0 -> integral of |z|^-1/2 t/(pi(t^2+z^2)) = sqrt(2/t) for t -> 0
    for t in (1e-5, 1e-40, 1e-150):
        assert rK(t) / math.sqrt(t / 2) == pytest.approx(1.0, rel=1e-6)


def test_gauge_range_and_roundtrip(rK):
    with pytest.raises(OutOfRangeError):
        rK(1e-250)
    with pytest.raises(OutOfRangeError):
        rK(11.0)
    g = GaugeFunction.from_dict(rK.to_dict())
    t = np.geomspace(1e-150, 5, 37)
    np.testing.assert_array_equal(g(t), rK(t))


def test_gauge_table_is_accurate_between_nodes(K, rK):
    # off-node heights; the interpolant is near exact where r_K ~ sqrt(t/2)
    # and within a few 1e-3 where the support cutoff bends it (t near 1)
    t = np.geomspace(1e-9, 1.0, 11) * 1.2345
    exact = 1 / np.array([convolve_poisson_kernel(s, K, 0.0, 1e-300, 1e-12) for s in t])
    small = t < 1e-4
    np.testing.assert_allclose(rK(t[small]), exact[small], rtol=1e-6)
    np.testing.assert_allclose(rK(t), exact, rtol=5e-3)


def test_identity_gauge():
    g = GaugeFunction.identity(1e-10, 1.0, 5)
    assert g.is_identity and g(0.25) == 0.25
    with pytest.raises(InvalidParameterError):
        log_grid(1.0, 0.5, 10)
    with pytest.raises(InvalidParameterError):
        gauge_from_kernel(RadialKernel.power_law(), [1e-3, 1e-4])


def test_pure_backend_selection():
    import os
    import subprocess
    import sys
    code = ("import numpy as np, potential_regions as p; "
            "from potential_regions.kernels import RadialKernel, smoothed_kernel; "
            "v, _ = smoothed_kernel(RadialKernel.power_law(), 1e-4, 0.0, np.array([0.0])); "
            "print(p.BACKEND, repr(float(v[0])))")
    env = dict(os.environ, POTENTIAL_REGIONS_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.split()
    assert out[0] == "numpy"
    assert float(out[1]) == pytest.approx(math.sqrt(2 / 1e-4), rel=1e-3)
