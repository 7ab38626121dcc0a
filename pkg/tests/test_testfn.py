import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import dblquad

from wdist.core import Signature, ValidationError
from wdist.testfn import (
    Term,
    TestFunction,
    apply_bessel,
    apply_LB,
    apply_LB_power,
    evaluate,
    phi_at_origin,
    psi_profile,
)

from conftest import SIG_EVEN, SIG_ODD, random_phi


def fd_bessel(f, x, axis, g, h=1e-3):
    """Fourth-order central differences for f'' + (g/x) f' along one axis."""
    e = np.zeros_like(x)
    e[axis] = h
    fp = [f(x + j * e) for j in (-2, -1, 1, 2)]
    f0 = f(x)
    d1 = (fp[0] - 8 * fp[1] + 8 * fp[2] - fp[3]) / (12 * h)
    d2 = (-fp[0] + 16 * fp[1] - 30 * f0 + 16 * fp[2] - fp[3]) / (12 * h * h)
    return d2 + g / x[axis] * d1


def test_evaluate_point_and_batch():
    phi = TestFunction.from_records([{"coeff": [2, 0], "exponents": [1, 0], "sigma": 1.0}])
    x = np.array([0.5, 0.2])
    assert evaluate(phi, x) == pytest.approx(2 * 0.25 * math.exp(-0.29))
    batch = evaluate(phi, np.stack([x, 2 * x]))
    assert batch.shape == (2,)
    np.testing.assert_allclose(batch[1], 2 * 1.0 * math.exp(-4 * 0.29))


def test_evaluate_wrong_dimension():
    with pytest.raises(ValidationError):
        evaluate(TestFunction.gaussian(3), np.zeros(4))


def test_term_validation():
    with pytest.raises(ValidationError):
        Term(1.0, (1, -1), 1.0)
    with pytest.raises(ValidationError):
        Term(1.0, (1.5, 0), 1.0)
    with pytest.raises(ValidationError):
        Term(1.0, (1, 0), 0.0)


def test_bessel_on_gaussian_at_origin():
    # B_gamma e^{-x^2} = (4x^2 - 2 - 2 gamma) e^{-x^2}
    phi = TestFunction.gaussian(1)
    out = apply_bessel(phi, 1, 0.7)
    np.testing.assert_allclose(phi_at_origin(out), -(2 + 2 * 0.7))


def test_apply_bessel_matches_finite_differences(rng):
    for _ in range(5):
        phi = random_phi(rng, 3, terms=3, max_exp=3)
        g = float(rng.uniform(0.2, 3))
        axis = int(rng.integers(1, 4))
        out = apply_bessel(phi, axis, g)
        for _ in range(5):
            x = rng.uniform(0.3, 1.5, 3)
            np.testing.assert_allclose(evaluate(out, x), fd_bessel(phi, x, axis - 1, g), atol=1e-7)


def test_apply_LB_symmetric_case_is_four_P_phi():
    phi = TestFunction.gaussian(4)
    out = apply_LB(phi, SIG_EVEN)
    x = np.array([0.3, 0.9, 0.4, 0.2])
    P = x[0] ** 2 + x[1] ** 2 - x[2] ** 2 - x[3] ** 2
    np.testing.assert_allclose(evaluate(out, x), 4 * P * evaluate(phi, x), rtol=1e-13)


def test_LB_power_origin_value_odd_signature():
    assert phi_at_origin(apply_LB_power(TestFunction.gaussian(4), SIG_ODD, 1)) == pytest.approx(2.0)


def test_consolidation_handles_cancellation():
    phi = TestFunction.from_records([{"coeff": [1, 0], "exponents": [1, 0], "sigma": 1.0}])
    zero = phi + phi * -1.0
    assert evaluate(zero, np.array([0.4, 0.4])) == 0


def test_records_roundtrip():
    phi = TestFunction.from_records([{"coeff": [1, -2], "exponents": [1, 0, 2, 0], "sigma": 0.8}])
    assert TestFunction.from_records(phi.to_records()) == phi


def _psi_direct(phi, sig, r, s):
    g1, g2 = sig.gamma_plus
    g3, g4 = sig.gamma_minus

    def f(b, a):
        x = np.array([r * math.cos(a), r * math.sin(a), s * math.cos(b), s * math.sin(b)])
        w = math.cos(a) ** g1 * math.sin(a) ** g2 * math.cos(b) ** g3 * math.sin(b) ** g4
        return (evaluate(phi, x) * w).real

    val, _ = dblquad(f, 0, math.pi / 2, 0, math.pi / 2, epsabs=1e-13, epsrel=1e-12)
    return 0.5 * val


@pytest.mark.parametrize("sig", [SIG_EVEN, SIG_ODD], ids=["even", "odd"])
def test_psi_profile_matches_sphere_quadrature(sig, rng):
    phi = random_phi(rng, 4, terms=3, max_exp=2)
    psi = psi_profile(phi, sig)
    for r, s in [(0.7, 0.3), (1.2, 1.1)]:
        np.testing.assert_allclose(psi(r, s).real, _psi_direct(phi, sig, r, s), rtol=1e-9, atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 4))
def test_apply_LB_is_linear(a, b, seed):
    rng = np.random.default_rng(seed)
    sig = Signature(2, 3, (0.4, 1.3), (0.9, 2.0, 0.6))
    f, g = random_phi(rng, 5), random_phi(rng, 5)
    x = rng.uniform(0.2, 1.2, 5)
    lhs = evaluate(apply_LB(f * a + g * b, sig), x)
    rhs = a * evaluate(apply_LB(f, sig), x) + b * evaluate(apply_LB(g, sig), x)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-12)
