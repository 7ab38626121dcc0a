"""The weighted generalized functions: cone layers, the lambda-pairing, and its poles.

Every formula-side quantity has an independent numerical counterpart:

* residues at simple poles come from a symmetric Richardson limit of
  (lambda - lambda0) times the continued pairing;
* Laurent data at double poles come from a discrete Fourier fit on a circle.
"""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .core import (
    TOL_INT,
    DomainError,
    IllConditioned,
    LaurentExpansion,
    PairingResult,
    PoleHit,
    PoleProximity,
    ResidueReport,
    Signature,
    Theorem,
    ValidationError,
    discrepancy,
    distance_to_poles,
    is_integer,
)
from .quad import finite_part_semiaxis, integrate_jacobi_endpoint, integrate_semiaxis
from .specfun import digamma, gamma_product_half
from .testfn import PsiProfile, TestFunction, apply_LB_power, phi_at_origin, psi_profile

POLE_GUARD = 0.02
RICHARDSON_EPS = (0.1, 0.05, 0.025)
CIRCLE_RADIUS = 0.1
CIRCLE_POINTS = 8
TAIL_TERMS = 40

NAN = complex(float("nan"), float("nan"))


def parallel_map(fn: Callable, items: Sequence, threads: Optional[int] = None) -> list:
    """``[fn(x) for x in items]``, possibly on a thread pool; order is always preserved."""
    items = list(items)
    threads = threads or os.cpu_count() or 1
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Cone layers delta^(k)(P)


class Variant(str, enum.Enum):
    OUTER_R = "OuterR"
    OUTER_S = "OuterS"


@dataclass(frozen=True)
class DeltaConeVariant:
    """Which radial variable carries the outer integral, and the derivative order."""

    variant: Variant
    k: int

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not (isinstance(self.k, (int, np.integer)) and self.k >= 0):
            raise ValidationError(f"k must be a non-negative integer (got {self.k!r})")
        object.__setattr__(self, "k", int(self.k))


def _falling(c: float, j: int, tol_int: float = TOL_INT) -> float:
    out = 1.0
    for i in range(j):
        f = c - i
        if abs(f) <= tol_int:
            return 0.0
        out *= f
    return out


def delta_radial_terms(sig: Signature, variant: DeltaConeVariant, psi: PsiProfile
                       ) -> List[Tuple[complex, float, float]]:
    """Outer integrand of the k-th cone layer as terms ``(coeff, e, rate)``.

    The integrand is the sum of coeff * x^e * exp(-rate * x^2) over the outer
    radius x.  The inner operator (1/(2s)) d/ds is d/dv with v = s^2, applied
    exactly to v^c exp(-v/sigma^2) by the Leibniz rule.
    """
    A, B = sig.plus_dim, sig.minus_dim
    k = variant.k
    out = []
    for t in psi.terms:
        inv = 1.0 / (t.sigma * t.sigma)
        alpha, beta = t.pow_r / 2.0, t.pow_s / 2.0
        if variant.variant is Variant.OUTER_R:
            c, keep, dim, sign = B / 2.0 - 1.0 + beta, alpha, A, 1.0
        else:
            c, keep, dim, sign = A / 2.0 - 1.0 + alpha, beta, B, (-1.0) ** k
        for j in range(k + 1):
            f = _falling(c, j)
            if f == 0.0:
                continue
            coeff = sign * t.coeff * math.comb(k, j) * f * (-inv) ** (k - j)
            out.append((coeff, 2.0 * keep + 2.0 * (c - j) + dim - 1.0, 2.0 * inv))
    return out


def delta_closed_form(terms: Sequence[Tuple[complex, float, float]]) -> complex:
    """Gamma-moment value of the radial terms, continued in the exponent.

    Used as a cross-check only; a term with (e+1)/2 at a pole raises PoleHit.
    """
    from .specfun import gamma

    total = 0j
    for coeff, e, rate in terms:
        h = (e + 1.0) / 2.0
        if h <= 0 and is_integer(h):
            raise PoleHit(f"exponent {e} sits on a pole of the continuation")
        total += coeff * 0.5 * rate ** (-h) * gamma(h)
    return total


def pair_delta(sig: Signature, variant: DeltaConeVariant, phi: TestFunction, tol: float = 1e-10,
               at_pole: str = "raise") -> PairingResult:
    """(delta^(k)(P), phi) in the chosen regularization.

    The outer integral is computed by direct quadrature while it converges
    (k < (n+|gamma|-2)/2) and as a Hadamard finite part otherwise.
    """
    psi = psi_profile(phi, sig)
    terms = [t for t in delta_radial_terms(sig, variant, psi) if t[0] != 0]
    if not terms:
        return PairingResult(0j, 0.0, True)
    coeffs = np.array([t[0] for t in terms], dtype=complex)
    exps = np.array([t[1] for t in terms])
    rates = np.array([t[2] for t in terms])
    scale = float(1.0 / math.sqrt(rates.min()))

    e_min = float(exps.min())
    if e_min > -1.0 + TOL_INT:
        def f(x):
            x = np.asarray(x, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                vals = coeffs * x[:, None] ** exps * np.exp(-rates * x[:, None] ** 2)
            return vals.sum(axis=1)

        res = integrate_semiaxis(f, tol, scale=scale)
        return PairingResult(res.value, res.abs_error, True)

    shifts = exps - e_min
    dshift = np.rint(shifts).astype(int)
    if np.max(np.abs(shifts - dshift)) > 1e-8:
        raise ValidationError("radial exponents are not integer-spaced")

    def F(x):
        x = np.asarray(x, dtype=float)
        return (coeffs * x[:, None] ** dshift * np.exp(-rates * x[:, None] ** 2)).sum(axis=1)

    mu = e_min + 1.0
    order = max(0, math.floor(-mu) + 1) + 2
    taylor = np.zeros(order + 1 + TAIL_TERMS, dtype=complex)
    for c, d, a in zip(coeffs, dshift, rates):
        m = 0
        while d + 2 * m < len(taylor):
            taylor[d + 2 * m] += c * (-a) ** m / math.factorial(m)
            m += 1
    res = finite_part_semiaxis(F, mu, taylor, tol, taylor_order=order, scale=scale, at_pole=at_pole)
    return PairingResult(res.value, res.abs_error, True)


def pair_delta_origin(sig: Signature, k: int, phi: TestFunction) -> complex:
    """(L_B^k delta, phi) = (L_B^k phi)(0)."""
    return phi_at_origin(apply_LB_power(phi, sig, k))


# ---------------------------------------------------------------------------
# The lambda-pairing


def pair_plambda_direct(sig: Signature, lam: complex, phi: TestFunction, tol: float = 1e-9) -> PairingResult:
    """(P_+^lambda, phi) for Re lambda > -1 by the (u, t) double integral.

    Phi(lambda, u) is a Jacobi-weighted t-integral with the weight
    (1 - t)^lambda t^((q+|gamma''|)/2 - 1); the u-integral is adaptive.
    """
    lam = complex(lam)
    if lam.real <= -1.0:
        raise DomainError(f"direct pairing needs Re(lambda) > -1 (got {lam})")
    psi = psi_profile(phi, sig)
    C = np.array([t.coeff for t in psi.terms], dtype=complex)
    half_r = np.array([t.pow_r / 2.0 for t in psi.terms])
    half_s = np.array([t.pow_s / 2.0 for t in psi.terms])
    inv = np.array([1.0 / t.sigma ** 2 for t in psi.terms])
    b_half = sig.minus_dim / 2.0
    expo = lam + sig.half_total - 1.0
    scale = float(1.0 / inv.min())
    inner_tol = 0.1 * tol

    def outer(u):
        u = np.asarray(u, dtype=float)
        up = u[:, None, None]

        # Psi_1(u, tu) = 2 psi(sqrt u, sqrt(tu)); with the 1/4 prefactor the kernel is C/2
        def g(t):
            tt = t[None, None, :]
            vals = (0.5 * C[None, :, None] * up ** (half_r + half_s)[None, :, None]
                    * tt ** half_s[None, :, None] * np.exp(-up * (1.0 + tt) * inv[None, :, None]))
            return vals.sum(axis=1)

        phi_u = integrate_jacobi_endpoint(g, lam, b_half, inner_tol).value
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(u > 0, np.exp(expo * np.log(np.where(u > 0, u, 1.0))), 0.0) * phi_u
        return out

    res = integrate_semiaxis(outer, tol, scale=scale)
    return PairingResult(res.value, res.abs_error, True)


def continuation_denominator(sig: Signature, lam: complex, k: int) -> complex:
    """4^k (lam+1)...(lam+k) (lam+N)...(lam+N+k-1) with N = (n+|gamma|)/2."""
    N = sig.half_total
    d = 4.0 ** k + 0j
    for j in range(k):
        d *= (lam + 1.0 + j) * (lam + N + j)
    return d


def continuation_order(lam: complex) -> int:
    """Smallest k >= 0 with Re(lambda) + k > -1/2."""
    return max(0, math.floor(-0.5 - complex(lam).real) + 1)


def pair_plambda_continued(sig: Signature, lam: complex, phi: TestFunction, tol: float = 1e-9,
                           k: Optional[int] = None, pole_guard: float = POLE_GUARD) -> PairingResult:
    """Meromorphic continuation of (P_+^lambda, phi) by the k-fold Green recursion.

    Raises
    ------
    PoleProximity
        When lambda lies within ``pole_guard`` of a pole of either series.
    """
    lam = complex(lam)
    dist = distance_to_poles(sig, lam)
    if dist < pole_guard:
        raise PoleProximity(f"lambda = {lam} is {dist:.3g} from a pole (guard {pole_guard})")
    if k is None:
        k = continuation_order(lam)
    elif (lam + k).real <= -1.0:
        raise DomainError(f"k = {k} leaves Re(lambda + k) <= -1")
    den = continuation_denominator(sig, lam, k)
    res = pair_plambda_direct(sig, lam + k, apply_LB_power(phi, sig, k), tol * abs(den))
    return PairingResult(res.value / den, res.abs_error_estimate / abs(den), res.converged)


def green_recursion_gap(sig: Signature, lam: complex, phi: TestFunction, tol: float = 1e-10) -> float:
    """Relative gap between the direct value and one Green-recursion step."""
    lhs = pair_plambda_direct(sig, lam, phi, tol).value
    rhs = pair_plambda_continued(sig, lam, phi, tol, k=1, pole_guard=0.0).value
    return abs(lhs - rhs) / max(abs(lhs), 1e-300)


# ---------------------------------------------------------------------------
# Oracles


def richardson_residue(evaluator: Callable[[complex], complex], pole: complex,
                       eps: Sequence[float] = RICHARDSON_EPS, threads: Optional[int] = None
                       ) -> Tuple[complex, float]:
    """Residue of a simple pole from samples at pole +/- eps.

    g(eps) = eps (F(pole+eps) - F(pole-eps)) / 2 is even in eps, so it is a
    series in eps^2 whose constant term is the residue.  That series is
    extrapolated to eps = 0 by a polynomial through all points.  Returns the
    limit and the change against the extrapolation that drops the largest eps.
    """
    eps = [float(e) for e in eps]
    pts = [pole + e for e in eps] + [pole - e for e in eps]
    vals = parallel_map(evaluator, pts, threads)
    g = [0.5 * e * (vals[i] - vals[i + len(eps)]) for i, e in enumerate(eps)]
    h = np.array([e * e for e in eps])
    gr = np.array(g, dtype=complex)

    def extrapolate(m):
        # Lagrange interpolation at h=0 through the last m points
        hh, gg = h[-m:], gr[-m:]
        total = 0j
        for i in range(m):
            w = 1.0
            for j in range(m):
                if j != i:
                    w *= hh[j] / (hh[j] - hh[i])
            total += w * gg[i]
        return total

    full = extrapolate(len(eps))
    prev = extrapolate(len(eps) - 1) if len(eps) > 1 else gr[-1]
    return complex(full), float(abs(full - prev))


def laurent_circle_fit(center: complex, radius: float, M: int, evaluator: Callable[[complex], complex],
                       threads: Optional[int] = None, values: Optional[Sequence[complex]] = None
                       ) -> LaurentExpansion:
    """Laurent coefficients c_-2, c_-1, c_0 from M samples on |lambda - center| = radius.

    The trapezoid rule on the circle is a discrete Fourier transform: mode j
    gives c_j radius^j up to aliasing from mode j + M.  The two highest
    recovered modes (j = M-4, M-3) measure the aliasing and set coeff_error.

    Raises
    ------
    IllConditioned
        When the trailing modes exceed 10% of the leading coefficient.
    """
    if M < 6:
        raise ValidationError("circle fit needs M >= 6")
    center = complex(center)
    theta = 2.0 * np.pi * np.arange(M) / M
    nodes = center + radius * np.exp(1j * theta)
    if values is None:
        values = parallel_map(evaluator, list(nodes), threads)
    v = np.asarray(values, dtype=complex)
    modes = {j: complex(np.mean(v * np.exp(-1j * j * theta))) for j in range(-2, M - 2)}
    coeff = {j: modes[j] * radius ** (-j) for j in (-2, -1, 0)}
    trailing = max(abs(modes[M - 4]), abs(modes[M - 3]))
    leading = max(abs(modes[-2]), abs(modes[-1]), abs(modes[0]))
    if trailing > 0.1 * leading:
        raise IllConditioned(f"trailing mode {trailing:.3e} exceeds 10% of leading {leading:.3e}")
    scale = max(abs(coeff[-2]), abs(coeff[-1]), 1e-300)
    order = 2 if abs(coeff[-2]) > 1e-3 * scale else (1 if abs(coeff[-1]) > trailing else 0)
    return LaurentExpansion(center, order, coeff[-2], coeff[-1], coeff[0], float(trailing))


# ---------------------------------------------------------------------------
# Theorem constants and routing


def first_series_route(sig: Signature, k: int) -> Tuple[Theorem, str]:
    N = sig.half_total
    if not is_integer(N):
        return Theorem.T1, "first series: n+|gamma| non-integer or odd"
    if k < round(N):
        return Theorem.T1, f"first series: n+|gamma| even and k={k} < (n+|gamma|)/2"
    return Theorem.UNSUPPORTED, (
        f"first series: lambda=-{k} also lies in the second series (k' = {k - round(N)}); "
        "routed to the double-pole handling"
    )


def second_series_route(sig: Signature, k: int) -> Tuple[Theorem, str]:
    N, Ah, Bh = sig.half_total, sig.plus_dim / 2.0, sig.minus_dim / 2.0
    if is_integer(N):
        note = "p+|gamma'| even (Regular by the simple-pole theorem)" if is_integer(Ah) else "p+|gamma'| not even"
        return Theorem.T3, f"Both: lambda={-round(N) - k} is in both series; {note}; double-pole handling"
    if is_integer(Ah):
        return Theorem.REGULAR, "second series: p+|gamma'| even, pairing regular"
    if is_integer(Bh):
        return Theorem.T2, "second series: n+|gamma| not even, q+|gamma''| even"
    return Theorem.UNSUPPORTED, "second series: neither p+|gamma'| nor q+|gamma''| even"


def theorem1_formula(sig: Signature, k: int, phi: TestFunction, tol: float = 1e-11) -> complex:
    delta = pair_delta(sig, DeltaConeVariant(Variant.OUTER_R, k - 1), phi, tol).value
    return (-1.0) ** (k - 1) / math.factorial(k - 1) * delta


def theorem2_constant(sig: Signature, k: int) -> float:
    Bh, N = sig.minus_dim / 2.0, sig.half_total
    from .specfun import gamma

    sign = (-1.0) ** round(Bh)
    return sign * gamma_product_half(sig.gamma) / (2.0 ** (sig.n + 2 * k) * math.factorial(k) * gamma(N + k))


def theta_constant(sig: Signature) -> float:
    """Coefficient of phi(0) inside Gamma(N) c_-1 at lambda = -N (N integer)."""
    Ah, N = sig.plus_dim / 2.0, round(sig.half_total)
    G = gamma_product_half(sig.gamma)
    s, c = math.sin(math.pi * Ah), math.cos(math.pi * Ah)
    if abs(s) < 1e-15:
        s = 0.0
    psi_term = s * (digamma(Ah) - digamma(N)) / math.pi if s else 0.0
    return (-1.0) ** N * G / 2.0 ** sig.n * (c + psi_term)


def theta_constant_literal(sig: Signature) -> float:
    """The theta coefficient in its literally printed form (reported for comparison only)."""
    Ah, Bh, N = sig.plus_dim / 2.0, sig.minus_dim / 2.0, round(sig.half_total)
    G = gamma_product_half(sig.gamma)
    if is_integer(Ah):
        return (-1.0) ** round(Bh) * G
    return (-1.0) ** (N - 1) * G * math.sin(math.pi * Ah) * (digamma(Ah) - digamma(N))


def double_pole_formula(sig: Signature, k: int, phi: TestFunction, tol: float = 1e-11) -> dict:
    """Formula-side c_-2 and c_-1 at lambda0 = -N-k for integer N.

    For k = 0 the assembled expressions are used directly; for k > 0 the
    k = 0 data of L_B^k phi is transported through the k-fold denominator.
    """
    from .specfun import gamma

    N = round(sig.half_total)
    Ah = sig.plus_dim / 2.0
    G = gamma_product_half(sig.gamma)
    psi_k = apply_LB_power(phi, sig, k)
    phi0 = phi_at_origin(psi_k)
    s = math.sin(math.pi * Ah)
    if abs(s) < 1e-15:
        s = 0.0
    c2 = (-1.0) ** (N + 1) * s * G * phi0 / (2.0 ** sig.n * math.pi * gamma(N))
    delta = pair_delta(sig, DeltaConeVariant(Variant.OUTER_R, N - 1), psi_k, tol, at_pole="hadamard").value
    theta = theta_constant(sig)
    c1 = ((-1.0) ** (N - 1) * delta + theta * phi0) / gamma(N)
    out = {"c_minus2": c2, "c_minus1": c1, "delta_fp": delta, "theta": theta,
           "theta_literal": theta_constant_literal(sig), "phi0": phi0}
    if k:
        lam0 = -N - k
        d0 = 1.0 / continuation_denominator(sig, lam0, k)
        logder = sum(1.0 / (lam0 + j) for j in range(1, k + 1)) + sum(1.0 / (lam0 + N + j) for j in range(k))
        d1 = -d0 * logder
        out["c_minus1"] = c1 * d0 + c2 * d1
        out["c_minus2"] = c2 * d0
    out["c_minus1_literal"] = ((-1.0) ** (N - 1) * delta + out["theta_literal"] * phi0) / gamma(N)
    return out


# ---------------------------------------------------------------------------
# Residues and Laurent data


def _unsupported(pole: complex, routing: str) -> ResidueReport:
    return ResidueReport(pole, Theorem.UNSUPPORTED, NAN, NAN, float("nan"), routing)


def residue_first_series(sig: Signature, k: int, phi: TestFunction, tol: float = 1e-9,
                         eps: Sequence[float] = RICHARDSON_EPS, threads: Optional[int] = None) -> ResidueReport:
    """Residue at lambda = -k: formula from the (k-1)-th cone layer, oracle from Richardson."""
    if k < 1:
        raise ValidationError("first-series index k must be >= 1")
    pole = complex(-k)
    theorem, routing = first_series_route(sig, k)
    if theorem is Theorem.UNSUPPORTED:
        return _unsupported(pole, routing)
    formula = theorem1_formula(sig, k, phi)
    oracle, err = richardson_residue(
        lambda l: pair_plambda_continued(sig, l, phi, tol).value, pole, eps, threads)
    return ResidueReport(pole, theorem, formula, oracle, discrepancy(formula, oracle), routing,
                         {"extrapolation_change": err})


def residue_second_series(sig: Signature, k: int, phi: TestFunction, tol: float = 1e-9,
                          eps: Sequence[float] = RICHARDSON_EPS, threads: Optional[int] = None,
                          circle_radius: float = CIRCLE_RADIUS, circle_points: int = CIRCLE_POINTS
                          ) -> ResidueReport:
    """Residue at lambda = -N-k; Both-tagged poles go to :func:`laurent_double_pole`."""
    if k < 0:
        raise ValidationError("second-series index k must be >= 0")
    theorem, routing = second_series_route(sig, k)
    pole = complex(-sig.half_total - k)
    if theorem is Theorem.T3:
        _, report = laurent_double_pole(sig, k, phi, tol, circle_radius, circle_points, threads)
        return ResidueReport(report.pole, report.theorem, report.formula_value, report.oracle_value,
                             report.discrepancy, routing, report.details)
    if theorem is Theorem.UNSUPPORTED:
        return _unsupported(pole, routing)
    if theorem is Theorem.REGULAR:
        formula = 0j
    else:
        formula = complex(theorem2_constant(sig, k) * pair_delta_origin(sig, k, phi))
    oracle, err = richardson_residue(
        lambda l: pair_plambda_continued(sig, l, phi, tol).value, pole, eps, threads)
    return ResidueReport(pole, theorem, formula, oracle, discrepancy(formula, oracle), routing,
                         {"extrapolation_change": err})


def laurent_double_pole(sig: Signature, k: int, phi: TestFunction, tol: float = 1e-9,
                        radius: float = CIRCLE_RADIUS, M: int = CIRCLE_POINTS,
                        threads: Optional[int] = None) -> Tuple[LaurentExpansion, ResidueReport]:
    """Laurent data at lambda = -N-k for even n+|gamma|.

    Returns the circle-fit expansion and a report comparing c_-1 (formula vs
    fit); c_-2 data sit in ``details``.  For k > 0 the comparison is
    exploratory (``details["exploratory"]``).
    """
    N = sig.half_total
    if not is_integer(N):
        raise ValidationError("double poles need n+|gamma| to be an even integer")
    if k < 0:
        raise ValidationError("k must be >= 0")
    pole = complex(-round(N) - k)
    _, routing = second_series_route(sig, k)

    def ev(lam):
        return pair_plambda_continued(sig, lam, phi, tol).value

    try:
        fit = laurent_circle_fit(pole, radius, M, ev, threads)
        used_radius = radius
    except IllConditioned:
        used_radius = radius / 2.0
        fit = laurent_circle_fit(pole, used_radius, M, ev, threads)
    f = double_pole_formula(sig, k, phi)
    order = 2 if f["c_minus2"] != 0 else 1
    details = {
        "order": order,
        "fit_order": fit.order,
        "c_minus2_formula": complex(f["c_minus2"]),
        "c_minus2_oracle": fit.c_minus2,
        "c_minus2_discrepancy": discrepancy(f["c_minus2"], fit.c_minus2),
        "theta": f["theta"],
        "theta_literal": f["theta_literal"],
        "c_minus1_literal": complex(f["c_minus1_literal"]),
        "coeff_error": fit.coeff_error,
        "circle_radius": used_radius,
        "exploratory": bool(k > 0),
    }
    report = ResidueReport(pole, Theorem.T3, complex(f["c_minus1"]), fit.c_minus1,
                           discrepancy(f["c_minus1"], fit.c_minus1), routing, details)
    return fit, report
