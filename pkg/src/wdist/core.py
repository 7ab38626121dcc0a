"""Form signature, parity routing and shared result types."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, List, Sequence, Tuple

TOL_INT = 1e-9


class WdistError(Exception):
    """Base class for all errors raised by the engine."""


class ValidationError(WdistError, ValueError):
    pass


class PoleError(WdistError):
    """Gamma (or a Gamma quotient) evaluated at a non-positive integer."""


class DomainError(WdistError, ValueError):
    pass


class NoConvergence(WdistError):
    def __init__(self, message: str, value: complex = float("nan"), abs_error: float = float("inf")):
        super().__init__(message)
        self.value = value
        self.abs_error = abs_error


class PoleHit(WdistError):
    """Continuation exponent landed on a pole of a subtracted Taylor term."""


class PoleProximity(WdistError):
    """Requested lambda is inside the pole guard of a pole."""


class IllConditioned(WdistError):
    """Circle fit whose trailing Fourier modes are too large."""


class Parity(str, enum.Enum):
    EVEN_INTEGER = "EvenInteger"
    ODD_INTEGER = "OddInteger"
    NON_INTEGER = "NonInteger"


@dataclass(frozen=True)
class ParityClass:
    value: float
    cls: Parity

    @property
    def is_integer(self) -> bool:
        return self.cls is not Parity.NON_INTEGER

    @property
    def is_even(self) -> bool:
        return self.cls is Parity.EVEN_INTEGER

    @property
    def is_odd(self) -> bool:
        return self.cls is Parity.ODD_INTEGER

    @property
    def nearest(self) -> int:
        return int(round(self.value))


def classify_parity(v: float, tol_int: float = TOL_INT) -> ParityClass:
    """Classify ``v`` as an even integer, odd integer or non-integer.

    A value counts as an integer when it lies within ``tol_int`` of one.
    """
    v = float(v)
    if not math.isfinite(v):
        raise ValidationError(f"parity of a non-finite value {v!r}")
    m = round(v)
    if abs(v - m) <= tol_int:
        cls = Parity.EVEN_INTEGER if int(m) % 2 == 0 else Parity.ODD_INTEGER
    else:
        cls = Parity.NON_INTEGER
    return ParityClass(v, cls)


def is_integer(v: float, tol_int: float = TOL_INT) -> bool:
    return abs(v - round(v)) <= tol_int


@dataclass(frozen=True)
class Signature:
    """Shape of the form |x'|^2 - |x''|^2 and of the weight x^gamma.

    ``gamma_plus`` belongs to the p plus-variables, ``gamma_minus`` to the
    q minus-variables.
    """

    p: int
    q: int
    gamma_plus: Tuple[float, ...]
    gamma_minus: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "gamma_plus", tuple(float(g) for g in self.gamma_plus))
        object.__setattr__(self, "gamma_minus", tuple(float(g) for g in self.gamma_minus))
        if not (isinstance(self.p, int) and isinstance(self.q, int)):
            raise ValidationError("p and q must be integers")
        if self.p <= 1:
            raise ValidationError(f"p must satisfy p > 1 (got p={self.p})")
        if self.q <= 1:
            raise ValidationError(f"q must satisfy q > 1 (got q={self.q})")
        if len(self.gamma_plus) != self.p:
            raise ValidationError(f"gamma_plus needs p={self.p} entries, got {len(self.gamma_plus)}")
        if len(self.gamma_minus) != self.q:
            raise ValidationError(f"gamma_minus needs q={self.q} entries, got {len(self.gamma_minus)}")
        for g in self.gamma + ():
            if not (math.isfinite(g) and g > 0):
                raise ValidationError(f"every gamma_i must be a positive real (got {g!r})")

    @classmethod
    def from_gamma(cls, p: int, q: int, gamma: Sequence[float]) -> "Signature":
        gamma = list(gamma)
        return cls(p, q, tuple(gamma[:p]), tuple(gamma[p:]))

    @property
    def n(self) -> int:
        return self.p + self.q

    @property
    def gamma(self) -> Tuple[float, ...]:
        return self.gamma_plus + self.gamma_minus

    @property
    def abs_gamma_plus(self) -> float:
        return math.fsum(self.gamma_plus)

    @property
    def abs_gamma_minus(self) -> float:
        return math.fsum(self.gamma_minus)

    @property
    def abs_gamma(self) -> float:
        return self.abs_gamma_plus + self.abs_gamma_minus

    @property
    def plus_dim(self) -> float:
        """p + |gamma'|."""
        return self.p + self.abs_gamma_plus

    @property
    def minus_dim(self) -> float:
        """q + |gamma''|."""
        return self.q + self.abs_gamma_minus

    @property
    def total_dim(self) -> float:
        """n + |gamma|, computed as plus_dim + minus_dim so the split is exact."""
        return self.plus_dim + self.minus_dim

    @property
    def half_total(self) -> float:
        return self.total_dim / 2.0

    def parities(self) -> dict:
        return {
            "plus": classify_parity(self.plus_dim),
            "minus": classify_parity(self.minus_dim),
            "total": classify_parity(self.total_dim),
        }

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "q": self.q,
            "gamma_plus": list(self.gamma_plus),
            "gamma_minus": list(self.gamma_minus),
        }


class Series(str, enum.Enum):
    FIRST = "First"
    SECOND = "Second"
    BOTH = "Both"


def _is_negative_integer(z: complex, tol_int: float = TOL_INT) -> bool:
    return abs(z.imag) <= tol_int and z.real < 0 and is_integer(z.real, tol_int)


def pole_series(sig: Signature, lambda_max_k: int) -> List[Tuple[complex, Series]]:
    """Candidate poles of the lambda-pairing up to index ``lambda_max_k``.

    First series: -1, ..., -lambda_max_k.  Second series:
    -(n+|gamma|)/2 - k for k = 0..lambda_max_k.  A second-series pole that
    is a negative integer also belongs to the (infinite) first series and
    is tagged ``Both``.  The result is sorted by decreasing real part.
    """
    if lambda_max_k < 0:
        raise ValidationError("lambda_max_k must be >= 0")
    poles: dict = {}
    for k in range(1, lambda_max_k + 1):
        poles[complex(-k)] = Series.FIRST
    half = sig.half_total
    for k in range(0, lambda_max_k + 1):
        z = complex(-half - k)
        if _is_negative_integer(z):
            z = complex(round(z.real))
            poles[z] = Series.BOTH
        else:
            poles[z] = Series.SECOND
    return sorted(poles.items(), key=lambda item: -item[0].real)


def distance_to_poles(sig: Signature, lam: complex) -> float:
    """Distance from ``lam`` to the nearest pole of either series."""
    lam = complex(lam)
    # first series: negative integers
    m = max(1, round(-lam.real)) if lam.real < 0 else 1
    d1 = min(abs(lam + j) for j in {max(1, m - 1), m, m + 1})
    half = sig.half_total
    j = max(0, round(-lam.real - half))
    d2 = min(abs(lam + half + jj) for jj in {max(0, j - 1), j, j + 1})
    return min(d1, d2)


@dataclass(frozen=True)
class PairingResult:
    value: complex
    abs_error_estimate: float
    converged: bool

    def to_dict(self) -> dict:
        return {
            "value": [self.value.real, self.value.imag],
            "error": self.abs_error_estimate,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class LaurentExpansion:
    pole: complex
    order: int
    c_minus2: complex
    c_minus1: complex
    c_0: complex
    coeff_error: float

    def to_dict(self) -> dict:
        return {
            "pole": [self.pole.real, self.pole.imag],
            "order": self.order,
            "c_minus2": [self.c_minus2.real, self.c_minus2.imag],
            "c_minus1": [self.c_minus1.real, self.c_minus1.imag],
            "c_0": [self.c_0.real, self.c_0.imag],
            "coeff_error": self.coeff_error,
        }


class Theorem(str, enum.Enum):
    T1 = "T1"
    T2 = "T2"
    T3 = "T3"
    REGULAR = "Regular"
    UNSUPPORTED = "UnsupportedCase"


def discrepancy(formula: complex, oracle: complex) -> float:
    """Absolute difference, made relative when |formula| > 1."""
    d = abs(complex(formula) - complex(oracle))
    scale = abs(formula)
    return d / scale if scale > 1 else d


def relative_difference(a: complex, b: complex) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 0 else 0.0


@dataclass(frozen=True)
class ResidueReport:
    pole: complex
    theorem: Theorem
    formula_value: complex
    oracle_value: complex
    discrepancy: float
    routing: str = ""
    details: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        def enc(v: Any):
            if isinstance(v, complex):
                return [v.real, v.imag]
            return v

        return {
            "pole": [self.pole.real, self.pole.imag],
            "theorem": self.theorem.value,
            "formula_value": enc(complex(self.formula_value)),
            "oracle_value": enc(complex(self.oracle_value)),
            "discrepancy": self.discrepancy,
            "routing": self.routing,
            "details": {k: enc(v) for k, v in self.details.items()},
        }
