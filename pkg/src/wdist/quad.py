"""Quadrature: semi-axis Gauss-Kronrod, Jacobi endpoint rules, finite parts,
and a tensor-product oracle over the positive orthant."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import roots_jacobi

from .core import TOL_INT, DomainError, NoConvergence, PoleHit, Signature, ValidationError
from .specfun import loggamma

MAX_SUBDIV = 2000
JACOBI_ORDER = 40
JACOBI_MAX_ORDER = 320


@dataclass(frozen=True)
class QuadResult:
    value: complex
    abs_error: float
    subdivisions: int


# Gauss-Kronrod 7/15 (QUADPACK qk15)
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG_FULL = np.zeros(15)
_WG_FULL[1:7:2] = _WG[:3]
_WG_FULL[7] = _WG[3]
_WG_FULL[8:15] = _WG_FULL[:7][::-1]


def _fsum_complex(values) -> complex:
    values = list(values)
    return complex(math.fsum(v.real for v in values), math.fsum(v.imag for v in values))


def adaptive_gk(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, tol: float,
                max_subdiv: int = MAX_SUBDIV) -> QuadResult:
    """Globally adaptive G7/K15 on [a, b] for a vectorised complex integrand.

    The error indicator is |K15 - G7| per panel (no QUADPACK damping), so the
    reported error is a conservative upper estimate.
    """

    def panels(lo: np.ndarray, hi: np.ndarray):
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        x = mid[:, None] + half[:, None] * _NODES[None, :]
        fx = np.asarray(f(x.ravel()), dtype=complex).reshape(x.shape)
        k = (fx @ _WK) * half
        g = (fx @ _WG_FULL) * half
        return k, np.abs(k - g)

    lo = np.array([a], dtype=float)
    hi = np.array([b], dtype=float)
    val, err = panels(lo, hi)
    subdiv = 1
    while err.sum() > tol:
        if subdiv >= max_subdiv:
            order = np.argsort(lo, kind="stable")
            raise NoConvergence(
                f"adaptive quadrature on [{a}, {b}] stalled at error {err.sum():.3e} > {tol:.3e}",
                _fsum_complex(val[order]), float(err.sum()),
            )
        emax = err.max()
        split = np.nonzero(err >= 0.25 * emax)[0][:16]
        m = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[split], m])
        new_hi = np.concatenate([m, hi[split]])
        nv, ne = panels(new_lo, new_hi)
        keep = np.ones(len(lo), dtype=bool)
        keep[split] = False
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        val = np.concatenate([val[keep], nv])
        err = np.concatenate([err[keep], ne])
        subdiv += len(split)
    order = np.argsort(lo, kind="stable")
    return QuadResult(_fsum_complex(val[order]), float(math.fsum(err[order])), subdiv)


def integrate_semiaxis(f: Callable[[np.ndarray], np.ndarray], tol: float, scale: float = 1.0,
                       upper: Optional[float] = None, max_subdiv: int = MAX_SUBDIV) -> QuadResult:
    """Integral of ``f`` over [0, upper] (default [0, inf)).

    Uses x = scale * t / (1 - t); ``scale`` should match the decay length of f.

    Raises
    ------
    NoConvergence
        When ``max_subdiv`` panels do not reach ``tol``.
    """
    t_end = 1.0 if upper is None else upper / (scale + upper)

    def g(t):
        om = 1.0 - t
        x = scale * t / om
        with np.errstate(over="ignore", invalid="ignore"):
            y = np.asarray(f(x), dtype=complex) * (scale / (om * om))
        y[~np.isfinite(y)] = 0.0
        return y

    return adaptive_gk(g, 0.0, t_end, tol, max_subdiv)


def truncation_radius(sigma: float, tol: float, power: float = 0.0) -> float:
    """Radius R with R^power exp(-R^2/sigma^2) (relative to sigma^power) below tol/10."""
    big = math.log(10.0 / min(tol, 0.1))
    return sigma * math.sqrt(big + 0.5 * max(power, 0.0) * math.log(big + max(power, 1.0)) + 1.0)


# ---------------------------------------------------------------------------
# Jacobi rules on [0, 1] with weight (1 - t)^alpha t^beta


def _jacobi_recurrence(n: int, a: complex, b: complex):
    ab = a + b
    alpha = np.empty(n, dtype=complex)
    beta = np.empty(max(n - 1, 0), dtype=complex)
    alpha[0] = (b - a) / (ab + 2.0)
    for k in range(1, n):
        d = 2.0 * k + ab
        alpha[k] = (b * b - a * a) / (d * (d + 2.0))
    for k in range(1, n):
        d = 2.0 * k + ab
        if k == 1:
            beta[0] = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) ** 2 * (3.0 + ab))
        else:
            beta[k - 1] = 4.0 * k * (k + a) * (k + b) * (k + ab) / (d * d * (d + 1.0) * (d - 1.0))
    return alpha, beta


@lru_cache(maxsize=512)
def jacobi_rule(n: int, alpha: complex, beta: float):
    """Nodes and weights on [0, 1] for the weight (1-t)^alpha t^beta.

    A complex ``alpha`` gives a complex-symmetric Jacobi matrix; its
    eigen-decomposition (normalised with v^T v = 1) yields a rule exact for
    polynomials of degree 2n-1 against the complex weight.
    """
    alpha = complex(alpha)
    if alpha.imag == 0.0:
        x, w = roots_jacobi(n, alpha.real, beta)
        t = 0.5 * (1.0 + x)
        w = w / 2.0 ** (alpha.real + beta + 1.0)
        return t, w.astype(complex)
    da, ob = _jacobi_recurrence(n, alpha, complex(beta))
    J = np.diag(da) + np.diag(np.sqrt(ob), 1) + np.diag(np.sqrt(ob), -1)
    x, V = np.linalg.eig(J)
    v0 = V[0, :] / np.sqrt(np.sum(V * V, axis=0))
    mu0 = 2.0 ** (alpha + beta + 1.0) * np.exp(
        loggamma(alpha + 1.0) + loggamma(complex(beta + 1.0)) - loggamma(alpha + beta + 2.0)
    )
    w = mu0 * v0 * v0
    order = np.lexsort((x.imag, x.real))
    t = 0.5 * (1.0 + x[order])
    w = w[order] / 2.0 ** (alpha + beta + 1.0)
    return t, w


def integrate_jacobi_endpoint(g: Callable[[np.ndarray], np.ndarray], lam: complex, beta_exp: float,
                              tol: float, order: int = JACOBI_ORDER) -> QuadResult:
    """Integral over (0,1) of (1-t)^lam t^(beta_exp-1) g(t).

    ``g`` receives the node vector and may return shape (..., nodes); the rule
    is applied along the last axis.  The order doubles until two successive
    rules agree to ``tol``.

    Raises
    ------
    DomainError
        For Re(lam) <= -1 or beta_exp <= 0, where the integral diverges.
    """
    lam = complex(lam)
    if lam.real <= -1.0:
        raise DomainError(f"Re(lambda) = {lam.real} <= -1: endpoint integral diverges")
    if beta_exp <= 0:
        raise DomainError(f"beta_exp = {beta_exp} must be positive")
    prev = None
    n = max(order // 2, 4)
    while True:
        t, w = jacobi_rule(n, lam, float(beta_exp) - 1.0)
        val = np.asarray(g(t), dtype=complex) @ w
        if prev is not None:
            err = float(np.max(np.abs(val - prev)))
            if err <= tol or n >= JACOBI_MAX_ORDER:
                if err > tol:
                    raise NoConvergence(f"Jacobi rule did not converge (error {err:.3e})", val, err)
                return QuadResult(val if np.ndim(val) else complex(val), err, n)
        prev = val
        n *= 2


# ---------------------------------------------------------------------------
# Hadamard finite part


def default_taylor_order(mu: float) -> int:
    """Smallest J >= 0 with mu + J > 0, plus two guard terms."""
    j = max(0, math.floor(-mu) + 1) if mu <= 0 else 0
    return j + 2


def finite_part_semiaxis(F: Callable[[np.ndarray], np.ndarray], mu: float, taylor: Sequence[complex],
                         tol: float, taylor_order: Optional[int] = None, split: float = 1.0,
                         scale: float = 1.0, upper: Optional[float] = None,
                         at_pole: str = "raise") -> QuadResult:
    """Analytic continuation in ``mu`` of the integral of F(r) r^(mu-1) over (0, inf).

    ``taylor`` holds F^(j)(0)/j!; entries beyond ``taylor_order`` are used to
    evaluate the subtracted remainder near 0 without cancellation.  At a pole
    mu = -j with a non-zero coefficient, ``at_pole="raise"`` raises
    :class:`PoleHit`; ``at_pole="hadamard"`` keeps the Hadamard finite part
    (the log term is taken relative to r = 1).
    """
    mu = float(mu)
    J = default_taylor_order(mu) if taylor_order is None else int(taylor_order)
    taylor = np.asarray(list(taylor), dtype=complex)
    if len(taylor) < J + 1:
        raise ValidationError(f"need {J + 1} Taylor coefficients, got {len(taylor)}")
    head = taylor[: J + 1]
    tail = taylor[J + 1:]
    cmax = float(np.max(np.abs(taylor))) if len(taylor) else 0.0
    added = []
    for j, c in enumerate(head):
        if abs(mu + j) <= TOL_INT:
            if abs(c) <= 1e-14 * max(cmax, 1e-300):
                continue
            if at_pole == "hadamard":
                added.append(c * math.log(split))
                continue
            raise PoleHit(f"mu = {mu} hits the pole of Taylor term {j}")
        added.append(c * split ** (mu + j) / (mu + j))
    powers = np.arange(J + 1)
    tail_powers = np.arange(J + 1, J + 1 + len(tail))

    def remainder(r):
        r = np.asarray(r, dtype=float)
        direct = np.asarray(F(r), dtype=complex) - (r[:, None] ** powers[None, :]) @ head
        if len(tail) > 8:
            near = r < 0.5 * split
            if np.any(near):
                rn = r[near]
                direct[near] = (rn[:, None] ** tail_powers[None, :]) @ tail
        return direct * r ** (mu - 1.0)

    inner = adaptive_gk(remainder, 0.0, split, 0.5 * tol)

    def outer(x):
        r = split + x
        return np.asarray(F(r), dtype=complex) * r ** (mu - 1.0)

    up = None if upper is None else max(upper - split, 0.0)
    out = integrate_semiaxis(outer, 0.5 * tol, scale=scale, upper=up)
    value = inner.value + _fsum_complex(added) + out.value
    return QuadResult(value, inner.abs_error + out.abs_error, inner.subdivisions + out.subdivisions)


# ---------------------------------------------------------------------------
# Double-exponential rules for the orthant oracle


@lru_cache(maxsize=16)
def tanh_sinh_rule(h: float, kmax: float = 4.0):
    """tanh-sinh nodes/weights on (0, 1); also returns 1 - t without cancellation."""
    k = np.arange(-math.ceil(kmax / h), math.ceil(kmax / h) + 1) * h
    z = 0.5 * math.pi * np.sinh(k)
    t = 1.0 / (1.0 + np.exp(-2.0 * z))
    omt = 1.0 / (1.0 + np.exp(2.0 * z))
    w = h * 0.5 * math.pi * np.cosh(k) / (2.0 * np.cosh(z) ** 2)
    good = (t > 0) & (omt > 0) & (w > 0)
    return t[good], omt[good], w[good]


def _sphere_rule(gammas: Sequence[float], m: int):
    """Points on the orthant of the unit sphere and weights carrying omega^gamma dS.

    Built recursively with omega = (sqrt(1-w) * omega_tilde, sqrt(w)) and a
    real Gauss-Jacobi rule in w, so polynomials in omega_i^2 are exact.
    """
    gammas = list(gammas)
    if len(gammas) == 1:
        return np.ones((1, 1)), np.ones(1)
    pts, wts = _sphere_rule(gammas[:-1], m)
    d = len(gammas)
    a = (d - 3 + sum(gammas[:-1])) / 2.0
    b = (gammas[-1] - 1.0) / 2.0
    x, w = roots_jacobi(m, a, b)
    wv = 0.5 * (1.0 + x)
    ww = w / 2.0 ** (a + b + 1.0) * 0.5
    new_pts = np.concatenate([
        (np.sqrt(1.0 - wv)[None, :, None] * pts[:, None, :]),
        np.broadcast_to(np.sqrt(wv)[None, :, None], (len(pts), m, 1)),
    ], axis=2).reshape(-1, d)
    new_w = (wts[:, None] * ww[None, :]).ravel()
    return new_pts, new_w


def orthant_oracle(phi, sig: Signature, region: str = "all", lam: Optional[complex] = None,
                   tol: float = 1e-9) -> QuadResult:
    """Brute-force tensor-product value of the weighted integral of phi.

    ``region="all"``: the integral of phi x^gamma over the orthant, on the
    Cartesian grid [0, R]^n.  ``region="cone"``: the integral of
    P^lam phi x^gamma over {P > 0}, in bipolar coordinates
    (r, t = s/r, omega', omega'') on [0, R] x [0, 1] x spheres.  ``lam=None``
    means P^0.  Radial directions use tanh-sinh rules refined until two
    levels agree; angular directions use exact Jacobi rules.
    """
    from .testfn import evaluate  # local: testfn imports specfun only

    if region not in ("all", "cone"):
        raise ValidationError(f"region must be 'all' or 'cone', got {region!r}")
    if lam is not None and complex(lam).real <= 0 and complex(lam) != 0:
        raise DomainError("the oracle is restricted to Re(lambda) > 0")
    lam = 0j if lam is None else complex(lam)
    if region == "all" and lam != 0:
        raise ValidationError("integrand_power needs region='cone'")
    sig_max = max(t.sigma for t in phi.terms)
    deg = phi.max_exponent_sum()
    R = truncation_radius(sig_max, tol, power=sig.total_dim + 2 * deg + 2 * max(lam.real, 0))

    if region == "all":
        return _oracle_cartesian(phi, sig, R, tol, evaluate)

    m = deg // 2 + 3
    ptsp, wp = _sphere_rule(sig.gamma_plus, m)
    ptsq, wq = _sphere_rule(sig.gamma_minus, m)
    N = sig.half_total
    Bh = sig.minus_dim / 2.0

    def level(h):
        tu, omu, wu = tanh_sinh_rule(h)
        tt, omt, wt = tanh_sinh_rule(h)
        # u = r^2 / R^2, tau = t^2
        U, T = np.meshgrid(tu, tt, indexing="ij")
        OMT = np.broadcast_to(omt[None, :], U.shape)
        W = wu[:, None] * wt[None, :]
        radial = np.exp((N + lam - 1.0) * np.log(U) + (Bh - 1.0) * np.log(T) + lam * np.log(OMT)) * W
        r = R * np.sqrt(U)
        s = r * np.sqrt(T)
        total = 0j
        for i in range(len(wp)):
            xp = r[..., None] * ptsp[i]
            for j in range(len(wq)):
                xq = s[..., None] * ptsq[j]
                vals = evaluate(phi, np.concatenate([xp, xq], axis=-1))
                total += wp[i] * wq[j] * np.sum(vals * radial)
        return 0.25 * R ** (2 * (N + lam)) * total

    h = 1.0 / 8.0
    prev = level(h)
    while True:
        h /= 2.0
        cur = level(h)
        err = abs(cur - prev)
        if err <= tol:
            return QuadResult(complex(cur), float(err), int(round(1 / h)))
        if h < 1.0 / 64.0:
            raise NoConvergence(f"orthant oracle stalled at error {err:.3e}", complex(cur), float(err))
        prev = cur


def _oracle_cartesian(phi, sig, R, tol, evaluate):
    def level(m):
        axes_pts, axes_w = [], []
        for g in sig.gamma:
            # y = (x/R)^2 on [0, 1]; x^g dx = R^(g+1)/2 * y^((g-1)/2) dy
            x, w = roots_jacobi(m, 0.0, (g - 1.0) / 2.0)
            y = 0.5 * (1.0 + x)
            axes_pts.append(R * np.sqrt(y))
            axes_w.append(w / 2.0 ** ((g - 1.0) / 2.0 + 1.0) * 0.5 * R ** (g + 1.0))
        grids = np.meshgrid(*axes_pts, indexing="ij")
        X = np.stack(grids, axis=-1)
        Wt = axes_w[0]
        for w in axes_w[1:]:
            Wt = np.multiply.outer(Wt, w)
        return complex(np.sum(evaluate(phi, X) * Wt))

    m = 16
    prev = level(m)
    while True:
        m *= 2
        cur = level(m)
        err = abs(cur - prev)
        if err <= tol:
            return QuadResult(cur, float(err), m)
        if m >= 64:
            raise NoConvergence(f"Cartesian oracle stalled at error {err:.3e}", cur, float(err))
        prev = cur
