import math

import mpmath as mp
import numpy as np
import pytest

from wdist.core import DomainError, NoConvergence, PoleHit, Signature
from wdist.quad import (
    adaptive_gk,
    default_taylor_order,
    finite_part_semiaxis,
    integrate_jacobi_endpoint,
    integrate_semiaxis,
    jacobi_rule,
    orthant_oracle,
    truncation_radius,
)
from wdist.specfun import gamma
from wdist.testfn import TestFunction

from conftest import SIG_EVEN, SIG_ODD


def gauss_taylor(n_terms):
    # e^{-r^2} = sum (-1)^m r^{2m} / m!
    c = np.zeros(n_terms)
    for m in range(0, (n_terms + 1) // 2):
        if 2 * m < n_terms:
            c[2 * m] = (-1) ** m / math.factorial(m)
    return c


@pytest.mark.parametrize("f, exact", [
    (lambda s: s ** 5 * np.exp(-2 * s * s), 1 / 8),
    (lambda s: np.exp(-s * s), math.sqrt(math.pi) / 2),
    (lambda s: s ** 3.5 * np.exp(-s * s), math.gamma(2.25) / 2),
])
def test_integrate_semiaxis_moments(f, exact):
    res = integrate_semiaxis(f, 1e-12)
    np.testing.assert_allclose(res.value, exact, rtol=1e-11)
    assert res.abs_error <= 1e-12


def test_integrate_semiaxis_upper_limit():
    res = integrate_semiaxis(lambda s: np.exp(-s), 1e-12, upper=2.0)
    np.testing.assert_allclose(res.value, 1 - math.exp(-2), rtol=1e-12)


def test_adaptive_reports_no_convergence():
    with pytest.raises(NoConvergence) as info:
        adaptive_gk(lambda x: np.sign(x - 0.3141), 0.0, 1.0, 1e-15, max_subdiv=20)
    assert info.value.abs_error > 1e-15


def test_jacobi_constant_is_one():
    res = integrate_jacobi_endpoint(lambda t: np.ones_like(t), 0.0, 1.0, 1e-13)
    np.testing.assert_allclose(res.value, 1.0, rtol=1e-14)


def test_jacobi_linear_weight():
    res = integrate_jacobi_endpoint(lambda t: t, 0.5, 1.5, 1e-13)
    np.testing.assert_allclose(res.value, float(mp.beta(2.5, 1.5)), rtol=1e-13)


def test_jacobi_beta_function_random(rng):
    worst = 0.0
    for _ in range(200):
        lam = complex(rng.uniform(-0.9, 3.0), rng.uniform(-3.0, 3.0))
        b = rng.uniform(0.2, 5.0)
        got = integrate_jacobi_endpoint(lambda t: np.ones_like(t), lam, b, 1e-12).value
        ref = complex(mp.beta(b, lam + 1))
        worst = max(worst, abs(got - ref) / abs(ref))
    assert worst < 1e-10


def test_jacobi_complex_integrand_against_mpmath():
    lam = -0.6 + 1.5j
    got = integrate_jacobi_endpoint(lambda t: np.exp(-2 * t), lam, 2.5, 1e-13).value
    ref = mp.quad(lambda t: (1 - t) ** lam * t ** 1.5 * mp.exp(-2 * t), [0, 0.5, 0.9, 0.99, 1])
    np.testing.assert_allclose(got, complex(ref), rtol=1e-9)


def test_jacobi_vector_valued_integrand():
    us = np.array([0.5, 1.0, 3.0])
    got = integrate_jacobi_endpoint(lambda t: np.exp(-us[:, None] * t[None, :]), 0.25, 1.0, 1e-13).value
    for u, g in zip(us, got):
        ref = mp.quad(lambda t: (1 - t) ** 0.25 * mp.exp(-u * t), [0, 1])
        np.testing.assert_allclose(g, float(ref), rtol=1e-12)


def test_jacobi_domain():
    with pytest.raises(DomainError):
        integrate_jacobi_endpoint(lambda t: t, -1.0, 1.0, 1e-10)
    with pytest.raises(DomainError):
        integrate_jacobi_endpoint(lambda t: t, 0.0, 0.0, 1e-10)


def test_complex_rule_exact_for_polynomials():
    t, w = jacobi_rule(10, 0.3 + 0.8j, 0.5)
    for m in range(0, 19):
        ref = complex(mp.beta(1.5 + m, 1.3 + 0.8j))
        np.testing.assert_allclose(np.sum(w * t ** m), ref, rtol=1e-11)


@pytest.mark.parametrize("mu", [2.0, -0.5, -2.5, -3.3])
def test_finite_part_gaussian(mu):
    res = finite_part_semiaxis(lambda r: np.exp(-r * r), mu, gauss_taylor(60), 1e-11)
    np.testing.assert_allclose(res.value, 0.5 * gamma(mu / 2), rtol=1e-9)


def test_finite_part_split_independence():
    a = finite_part_semiaxis(lambda r: np.exp(-r * r), -1.5, gauss_taylor(60), 1e-11).value
    b = finite_part_semiaxis(lambda r: np.exp(-r * r), -1.5, gauss_taylor(60), 1e-11, split=0.5).value
    assert abs(a - b) < 1e-10


def test_finite_part_equals_direct_for_positive_mu():
    f = lambda r: np.exp(-r * r) * (1 + r)
    taylor = gauss_taylor(60) + np.concatenate([[0], gauss_taylor(59)])
    fp = finite_part_semiaxis(f, 1.7, taylor, 1e-12).value
    direct = integrate_semiaxis(lambda r: f(r) * r ** 0.7, 1e-12).value
    np.testing.assert_allclose(fp, direct, rtol=1e-10)


def test_finite_part_pole_hit_and_hadamard():
    with pytest.raises(PoleHit):
        finite_part_semiaxis(lambda r: np.exp(-r * r), -2.0, gauss_taylor(60), 1e-11)
    # the r^2 coefficient of e^{-r^2} is nonzero; odd poles see a vanishing coefficient
    odd = finite_part_semiaxis(lambda r: np.exp(-r * r), -1.0, gauss_taylor(60), 1e-11).value
    np.testing.assert_allclose(odd, 0.5 * complex(mp.gamma(-0.5)), rtol=1e-9)
    # Hadamard part at mu=0 with the log measured from r=1: -gamma_E/2
    had = finite_part_semiaxis(lambda r: np.exp(-r * r), 0.0, gauss_taylor(60), 1e-11, at_pole="hadamard").value
    np.testing.assert_allclose(had, -0.5 * float(mp.euler), rtol=1e-9)


def test_default_taylor_order():
    assert default_taylor_order(2.0) == 2
    assert default_taylor_order(-0.5) == 3
    assert default_taylor_order(-2.5) == 5


def test_truncation_radius_bounds_tail():
    R = truncation_radius(1.0, 1e-10, power=7)
    assert R ** 7 * math.exp(-R * R) < 1e-11


def test_orthant_all_gaussian():
    res = orthant_oracle(TestFunction.gaussian(4), SIG_EVEN, "all")
    np.testing.assert_allclose(res.value, 1 / 16, rtol=1e-9)


def test_orthant_all_raised_moment():
    phi = TestFunction.from_records([{"coeff": [1, 0], "exponents": [1, 0, 0, 0], "sigma": 1.0}])
    res = orthant_oracle(phi, SIG_EVEN, "all")
    np.testing.assert_allclose(res.value, 1 / 16, rtol=1e-9)


def test_orthant_all_separable_product():
    sig = Signature(2, 2, (0.3, 1.7), (0.9, 2.4))
    phi = TestFunction.from_records([{"coeff": [1, 0], "exponents": [2, 0, 1, 0], "sigma": 1.3}])
    exps = (2, 0, 1, 0)
    ref = np.prod([0.5 * 1.3 ** (2 * a + g + 1) * math.gamma(a + (g + 1) / 2) for a, g in zip(exps, sig.gamma)])
    np.testing.assert_allclose(orthant_oracle(phi, sig, "all").value, ref, rtol=1e-9)


def test_orthant_cone_matches_closed_form():
    from conftest import mp_pairing

    phi = TestFunction.gaussian(4)
    res = orthant_oracle(phi, SIG_ODD, "cone", lam=1.0)
    np.testing.assert_allclose(res.value, mp_pairing(SIG_ODD, phi, 1.0), rtol=1e-9)


def test_orthant_rejects_singular_power():
    with pytest.raises(DomainError):
        orthant_oracle(TestFunction.gaussian(4), SIG_EVEN, "cone", lam=-0.5)
