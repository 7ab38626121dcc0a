"""Gamma-family functions and weighted spherical constants.

Gamma is a Lanczos approximation (g = 7, nine coefficients) with the
reflection formula for Re z < 1/2.  Products and quotients of Gamma values
are always formed in log space with explicit sign tracking.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple

from .core import TOL_INT, DomainError, PoleError

__all__ = [
    "gamma",
    "loggamma",
    "lgamma_sign",
    "digamma",
    "sinpi",
    "reflection_check",
    "sphere_measure",
    "dirichlet_monomial",
    "gamma_product_half",
    "GammaQuotient",
    "beta",
]

_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
EULER_GAMMA = 0.57721566490153286061


def _nonpositive_integer(z: complex) -> bool:
    return abs(z.imag) <= TOL_INT and z.real <= TOL_INT and abs(z.real - round(z.real)) <= TOL_INT


def sinpi(x: float) -> float:
    """sin(pi x) with exact reduction of x modulo 2, accurate near the zeros."""
    r = x - 2.0 * round(x / 2.0)  # exact, r in [-1, 1]
    if r > 0.5:
        return math.sin(math.pi * (1.0 - r))
    if r < -0.5:
        return -math.sin(math.pi * (1.0 + r))
    return math.sin(math.pi * r)


def _csinpi(z: complex) -> complex:
    r = z.real - 2.0 * round(z.real / 2.0)
    return cmath.sin(math.pi * complex(r, z.imag))


def _lanczos_log(z: complex) -> complex:
    # log Gamma(z) for Re z >= 1/2
    z = z - 1.0
    a = _LANCZOS[0]
    t = z + _G + 0.5
    for i in range(1, len(_LANCZOS)):
        a += _LANCZOS[i] / (z + i)
    return _LOG_SQRT_2PI + (z + 0.5) * cmath.log(t) - t + cmath.log(a)


def _lanczos(x: float) -> float:
    z = x - 1.0
    a = _LANCZOS[0]
    t = z + _G + 0.5
    for i in range(1, len(_LANCZOS)):
        a += _LANCZOS[i] / (z + i)
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * math.exp(-t) * a


def loggamma(z: complex) -> complex:
    """Principal-ish log Gamma for complex ``z`` (branch not tracked for Re z < 1/2)."""
    z = complex(z)
    if _nonpositive_integer(z):
        raise PoleError(f"Gamma has a pole at {z}")
    if z.real < 0.5:
        return cmath.log(math.pi) - cmath.log(_csinpi(z)) - _lanczos_log(1.0 - z)
    return _lanczos_log(z)


def lgamma_sign(x: float) -> Tuple[float, int]:
    """Return ``(log|Gamma(x)|, sign Gamma(x))`` for real ``x``."""
    x = float(x)
    if _nonpositive_integer(complex(x)):
        raise PoleError(f"Gamma has a pole at {x}")
    if x >= 0.5:
        return _lanczos_log(complex(x)).real, 1
    s = sinpi(x)
    lg, _ = lgamma_sign(1.0 - x)
    return math.log(math.pi) - math.log(abs(s)) - lg, (1 if s > 0 else -1)


def gamma(x):
    """Gamma function for real or complex argument.

    Real arguments return a float, complex ones a complex.  Arguments of
    magnitude above 30 go through log space.

    Raises
    ------
    PoleError
        At non-positive integers (within ``TOL_INT``).
    """
    if isinstance(x, complex):
        return cmath.exp(loggamma(x))
    x = float(x)
    if _nonpositive_integer(complex(x)):
        raise PoleError(f"Gamma has a pole at {x}")
    if abs(x) > 30.0:
        lg, s = lgamma_sign(x)
        return s * math.exp(lg)
    if x < 0.5:
        return math.pi / (sinpi(x) * _lanczos(1.0 - x))
    return _lanczos(x)


# Bernoulli terms B_{2k}/(2k) for the asymptotic digamma series
_DIGAMMA_ASYMP = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


def digamma(x: float) -> float:
    """psi(x) = Gamma'(x)/Gamma(x) for x > 0."""
    x = float(x)
    if not x > 0:
        raise DomainError(f"digamma is only provided for x > 0 (got {x})")
    acc = 0.0
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    powk = inv2
    for c in _DIGAMMA_ASYMP:
        series += c * powk
        powk *= inv2
    return acc + math.log(x) - 0.5 / x - series


def reflection_check(x: float) -> float:
    """Gamma(1-x) Gamma(x) sin(pi x) / pi; equals 1 for non-integer x."""
    x = float(x)
    if abs(x - round(x)) <= TOL_INT:
        raise DomainError(f"reflection_check needs a non-integer (got {x})")
    l1, s1 = lgamma_sign(x)
    l2, s2 = lgamma_sign(1.0 - x)
    return s1 * s2 * math.exp(l1 + l2) * sinpi(x) / math.pi


@dataclass(frozen=True)
class GammaQuotient:
    """prefactor * prod Gamma(numerator_args) / prod Gamma(denominator_args).

    A denominator argument at a pole of Gamma makes the quotient vanish; such
    arguments are listed in :attr:`zeros`.  A numerator argument at a pole
    raises :class:`PoleError`.
    """

    numerator_args: Tuple[float, ...]
    denominator_args: Tuple[float, ...] = ()
    prefactor: complex = 1.0
    zeros: Tuple[float, ...] = field(init=False, default=())

    def __post_init__(self):
        object.__setattr__(self, "numerator_args", tuple(float(a) for a in self.numerator_args))
        object.__setattr__(self, "denominator_args", tuple(float(a) for a in self.denominator_args))
        z = tuple(a for a in self.denominator_args if _nonpositive_integer(complex(a)))
        object.__setattr__(self, "zeros", z)

    @property
    def poles(self) -> Tuple[float, ...]:
        return tuple(a for a in self.numerator_args if _nonpositive_integer(complex(a)))

    def log_abs_and_sign(self) -> Tuple[float, int]:
        if self.poles:
            raise PoleError(f"numerator Gamma at pole(s) {self.poles}")
        if self.zeros:
            return -math.inf, 0
        log_abs, sign = 0.0, 1
        for a in self.numerator_args:
            lg, s = lgamma_sign(a)
            log_abs += lg
            sign *= s
        for a in self.denominator_args:
            lg, s = lgamma_sign(a)
            log_abs -= lg
            sign *= s
        return log_abs, sign

    def value(self) -> complex:
        log_abs, sign = self.log_abs_and_sign()
        if sign == 0:
            return 0.0 * self.prefactor
        return self.prefactor * sign * math.exp(log_abs)


def beta(a: float, b: float) -> float:
    return GammaQuotient((a, b), (a + b,)).value().real


def dirichlet_monomial(dim: int, exponents: Sequence[int], gamma_part: Sequence[float]) -> float:
    """Weighted orthant-sphere integral of prod omega_i^(2 a_i + gamma_i).

    Equals prod Gamma(a_i + (gamma_i+1)/2) / (2^(dim-1) Gamma((dim + 2|a| + |gamma|)/2)).
    """
    if dim < 1 or len(gamma_part) != dim or len(exponents) != dim:
        raise DomainError("dim, exponents and gamma_part lengths disagree")
    num = [a + (g + 1.0) / 2.0 for a, g in zip(exponents, gamma_part)]
    den = [(dim + 2 * sum(exponents) + math.fsum(gamma_part)) / 2.0]
    return GammaQuotient(num, den, 2.0 ** (1 - dim)).value().real


def sphere_measure(dim: int, gamma_part: Sequence[float]) -> float:
    """Weighted area of the unit sphere's orthant part, |S_1^+(dim)|_gamma."""
    return dirichlet_monomial(dim, [0] * dim, gamma_part)


def gamma_product_half(gammas: Sequence[float]) -> float:
    """prod Gamma((gamma_i + 1)/2), formed in log space."""
    return GammaQuotient([(g + 1.0) / 2.0 for g in gammas]).value().real
