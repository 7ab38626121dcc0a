"""Shared fixtures and independent mpmath references.

The references below never call into the package: sphere integrals are
written out as Gamma products and the lambda-pairing of a Gaussian term is
the hypergeometric closed form obtained by doing the radial integral first.
"""
import mpmath as mp
import numpy as np
import pytest

from wdist import Signature, TestFunction

mp.mp.dps = 30

SIG_EVEN = Signature(2, 2, (1.0, 1.0), (1.0, 1.0))
SIG_ODD = Signature(2, 2, (0.5, 0.5), (1.0, 1.0))
SIG_HALF = Signature(2, 2, (0.5, 0.5), (0.5, 0.5))

ACCEPTANCE = {}


def mp_sphere(gammas, exps):
    d = len(gammas)
    num = mp.fprod(mp.gamma(a + (mp.mpf(g) + 1) / 2) for a, g in zip(exps, gammas))
    return num / (2 ** (d - 1) * mp.gamma((d + 2 * sum(exps) + mp.fsum(gammas)) / mp.mpf(2)))


def mp_pairing(sig, phi, lam):
    """(P_+^lambda, phi) continued to all lambda off the poles, to 30 digits."""
    return complex(mp_pairing_mp(sig, phi, mp.mpmathify(lam)))


def mp_laurent(sig, phi, pole, M=48, rho=mp.mpf("0.05")):
    """(c_-2, c_-1, c_0) of the closed form by a fine contour, to ~25 digits."""
    vals = [mp_pairing_mp(sig, phi, pole + rho * mp.expj(2 * mp.pi * m / M)) for m in range(M)]

    def coeff(j):
        return complex(mp.fsum(v * mp.expj(-2 * mp.pi * j * m / M) for m, v in enumerate(vals)) / M / rho ** j)

    return coeff(-2), coeff(-1), coeff(0)


def mp_pairing_mp(sig, phi, lam):
    # radial integral first: a Gamma factor times a Beta-weighted 2F1 in the cone variable
    Bh = (sig.q + mp.fsum(sig.gamma_minus)) / 2
    N = (sig.n + mp.fsum(sig.gamma)) / 2
    total = mp.mpf(0)
    for t in phi.terms:
        ap, aq = t.exponents[: sig.p], t.exponents[sig.p:]
        alpha, beta = sum(ap), sum(aq)
        c = mp.mpc(t.coeff.real, t.coeff.imag) * mp_sphere(sig.gamma_plus, ap) * mp_sphere(sig.gamma_minus, aq)
        s = lam + N + alpha + beta
        b = Bh + beta
        sig2 = mp.mpf(t.sigma) ** 2
        total += c / 4 * mp.gamma(s) * sig2 ** s * mp.gamma(b) * mp.gamma(lam + 1) / mp.gamma(lam + 1 + b) * mp.hyp2f1(
            s, b, lam + 1 + b, -1)
    return total


def random_phi(rng, n, terms=2, max_exp=2):
    records = []
    for _ in range(terms):
        exps = [0] * n
        budget = int(rng.integers(0, max_exp + 1))
        for _ in range(budget):
            exps[int(rng.integers(0, n))] += 1
        records.append({"coeff": [float(rng.uniform(-1, 1)), 0.0], "exponents": exps,
                        "sigma": float(rng.uniform(0.7, 1.3))})
    return TestFunction.from_records(records)


def random_signature(rng):
    p, q = int(rng.integers(2, 4)), int(rng.integers(2, 4))
    return Signature(p, q, tuple(rng.uniform(0.2, 2.0, p)), tuple(rng.uniform(0.2, 2.0, q)))


@pytest.fixture
def gauss4():
    return TestFunction.gaussian(4)


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
