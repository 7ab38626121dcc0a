"""Even test functions: sums of c * prod x_i^(2 a_i) * exp(-|x|^2 / sigma^2).

The algebra is closed under every one-dimensional Bessel operator
B_gamma = d^2/dx^2 + (gamma/x) d/dx, so the ultra-hyperbolic operator acts
exactly, and the bipolar sphere averages reduce to Gamma quotients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .core import Signature, ValidationError
from .specfun import dirichlet_monomial

DROP_RELATIVE = 1e-15


@dataclass(frozen=True)
class Term:
    coeff: complex
    exponents: Tuple[int, ...]
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "coeff", complex(self.coeff))
        if any(isinstance(a, bool) or int(a) != a for a in self.exponents):
            raise ValidationError(f"exponents must be non-negative integers, got {self.exponents}")
        exps = tuple(int(a) for a in self.exponents)
        if any(a < 0 for a in exps):
            raise ValidationError(f"exponents must be non-negative integers, got {self.exponents}")
        object.__setattr__(self, "exponents", exps)
        sigma = float(self.sigma)
        if not (math.isfinite(sigma) and sigma > 0):
            raise ValidationError(f"sigma must be a positive real, got {self.sigma}")
        object.__setattr__(self, "sigma", sigma)

    @property
    def key(self) -> Tuple[Tuple[int, ...], float]:
        return (self.exponents, self.sigma)


def _consolidate(pairs: Iterable[Tuple[Tuple[Tuple[int, ...], float], complex]]) -> Tuple[Term, ...]:
    acc: Dict[Tuple[Tuple[int, ...], float], complex] = {}
    for key, c in pairs:
        acc[key] = acc.get(key, 0j) + c
    if not acc:
        return ()
    cmax = max(abs(c) for c in acc.values())
    keep = sorted((k, c) for k, c in acc.items() if cmax > 0 and abs(c) > DROP_RELATIVE * cmax)
    return tuple(Term(c, k[0], k[1]) for k, c in keep)


@dataclass(frozen=True)
class TestFunction:
    """Immutable finite sum of Gaussian-weighted even monomials."""

    __test__ = False  # not a pytest class

    terms: Tuple[Term, ...]

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise ValidationError("a test function needs at least one term")
        n = len(terms[0].exponents)
        if any(len(t.exponents) != n for t in terms):
            raise ValidationError("all terms must have the same number of exponents")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_records(cls, records: Sequence[dict]) -> "TestFunction":
        terms = []
        for r in records:
            c = r["coeff"]
            if isinstance(c, (list, tuple)):
                c = complex(c[0], c[1])
            terms.append(Term(c, tuple(r["exponents"]), r["sigma"]))
        return cls(tuple(terms))

    @classmethod
    def gaussian(cls, n: int, sigma: float = 1.0, coeff: complex = 1.0) -> "TestFunction":
        return cls((Term(coeff, (0,) * n, sigma),))

    @property
    def n(self) -> int:
        return len(self.terms[0].exponents)

    @property
    def is_real(self) -> bool:
        return all(t.coeff.imag == 0 for t in self.terms)

    def max_exponent_sum(self) -> int:
        return max(sum(t.exponents) for t in self.terms)

    def consolidated(self) -> "TestFunction":
        terms = _consolidate((t.key, t.coeff) for t in self.terms)
        return TestFunction(terms) if terms else self * 0.0

    def to_records(self) -> List[dict]:
        return [
            {"coeff": [t.coeff.real, t.coeff.imag], "exponents": list(t.exponents), "sigma": t.sigma}
            for t in self.terms
        ]

    @cached_property
    def _arrays(self):
        c = np.array([t.coeff for t in self.terms], dtype=complex)
        a = np.array([t.exponents for t in self.terms], dtype=float)
        s = np.array([t.sigma for t in self.terms], dtype=float)
        return c, a, s

    def __add__(self, other: "TestFunction") -> "TestFunction":
        return TestFunction(self.terms + other.terms).consolidated()

    def __mul__(self, scalar: complex) -> "TestFunction":
        return TestFunction(tuple(Term(t.coeff * scalar, t.exponents, t.sigma) for t in self.terms))

    __rmul__ = __mul__

    def __call__(self, x):
        return evaluate(self, x)


def evaluate(phi: TestFunction, x) -> np.ndarray:
    """Evaluate phi at one point (shape (n,)) or a batch (shape (..., n))."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != phi.n:
        raise ValidationError(f"point has {x.shape[-1]} coordinates, test function has {phi.n}")
    c, a, s = phi._arrays
    x2 = x * x
    r2 = x2.sum(axis=-1)
    out = np.zeros(x.shape[:-1], dtype=complex)
    for ci, ai, si in zip(c, a, s):
        mono = np.prod(x2 ** ai, axis=-1)
        out = out + ci * mono * np.exp(-r2 / (si * si))
    return out if out.ndim else complex(out)


def _bessel_term(term: Term, axis: int, gamma_i: float):
    # B_gamma on u(s) = s^a exp(-s/sigma^2) with s = x_axis^2: (2+2 gamma) u' + 4 s u''
    a = term.exponents[axis]
    inv = 1.0 / (term.sigma * term.sigma)
    out = []

    def shifted(da):
        e = list(term.exponents)
        e[axis] = a + da
        return (tuple(e), term.sigma)

    if a >= 1:
        out.append((shifted(-1), term.coeff * 2.0 * a * (2.0 * a - 1.0 + gamma_i)))
    out.append((shifted(0), term.coeff * -(2.0 + 2.0 * gamma_i + 8.0 * a) * inv))
    out.append((shifted(1), term.coeff * 4.0 * inv * inv))
    return out


def apply_bessel(phi: TestFunction, axis: int, gamma_i: float) -> TestFunction:
    """Exact image of phi under B_gamma acting on coordinate ``axis`` (1-based)."""
    if not 1 <= axis <= phi.n:
        raise ValidationError(f"axis must be in 1..{phi.n}")
    pairs = []
    for t in phi.terms:
        pairs.extend(_bessel_term(t, axis - 1, float(gamma_i)))
    terms = _consolidate(pairs)
    return TestFunction(terms) if terms else phi * 0.0


def apply_LB(phi: TestFunction, sig: Signature) -> TestFunction:
    """L_B = B_1 + ... + B_p - B_{p+1} - ... - B_n applied exactly."""
    if phi.n != sig.n:
        raise ValidationError(f"test function has {phi.n} axes, signature needs {sig.n}")
    pairs = []
    for t in phi.terms:
        for i, g in enumerate(sig.gamma):
            sign = 1.0 if i < sig.p else -1.0
            pairs.extend((k, sign * c) for k, c in _bessel_term(t, i, g))
    terms = _consolidate(pairs)
    return TestFunction(terms) if terms else phi * 0.0


def apply_LB_power(phi: TestFunction, sig: Signature, k: int) -> TestFunction:
    for _ in range(k):
        phi = apply_LB(phi, sig)
    return phi


def phi_at_origin(phi: TestFunction) -> complex:
    return sum((t.coeff for t in phi.terms if not any(t.exponents)), 0j)


@dataclass(frozen=True)
class PsiTerm:
    coeff: complex
    pow_r: int
    pow_s: int
    sigma: float


@dataclass(frozen=True)
class PsiProfile:
    """psi(r, s) = 1/2 of the weighted double sphere average of phi, in closed form."""

    terms: Tuple[PsiTerm, ...]

    def __call__(self, r, s):
        r = np.asarray(r, dtype=float)
        s = np.asarray(s, dtype=float)
        out = np.zeros(np.broadcast(r, s).shape, dtype=complex)
        for t in self.terms:
            out = out + t.coeff * r ** t.pow_r * s ** t.pow_s * np.exp(-(r * r + s * s) / t.sigma ** 2)
        return out if out.ndim else complex(out)


def psi_profile(phi: TestFunction, sig: Signature) -> PsiProfile:
    if phi.n != sig.n:
        raise ValidationError(f"test function has {phi.n} axes, signature needs {sig.n}")
    acc: Dict[Tuple[int, int, float], complex] = {}
    for t in phi.terms:
        ap, aq = t.exponents[: sig.p], t.exponents[sig.p:]
        c = 0.5 * t.coeff * dirichlet_monomial(sig.p, ap, sig.gamma_plus) * dirichlet_monomial(
            sig.q, aq, sig.gamma_minus
        )
        key = (2 * sum(ap), 2 * sum(aq), t.sigma)
        acc[key] = acc.get(key, 0j) + c
    terms = tuple(PsiTerm(c, k[0], k[1], k[2]) for k, c in sorted(acc.items()) if c != 0)
    return PsiProfile(terms or (PsiTerm(0j, 0, 0, 1.0),))
