"""``wdist`` command-line front end.

Exit codes: 0 success (Regular and UnsupportedCase outcomes included),
1 invalid input, 2 quadrature did not converge, 3 a verify check failed.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import replace
from typing import Any, Dict, List, Optional

import numpy as np

from . import dist
from .config import JOBS, JobConfig, load_config
from .core import (
    DomainError,
    NoConvergence,
    PoleHit,
    PoleProximity,
    Theorem,
    ValidationError,
    WdistError,
    distance_to_poles,
    relative_difference,
)
from .dist import DeltaConeVariant, Variant
from .quad import orthant_oracle

EXIT_OK, EXIT_INVALID, EXIT_NOCONV, EXIT_CHECK = 0, 1, 2, 3
GREEN_TOL = 1e-6
REGULARIZATION_TOL = 1e-7


def _jsonable(v: Any) -> Any:
    if isinstance(v, complex):
        return [_jsonable(v.real), _jsonable(v.imag)]
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "value") and isinstance(v, Theorem):
        return v.value
    return v


def _entry(name: str, value: complex, error: float = float("nan"), theorem: str = "",
           oracle: complex = complex("nan"), disc: float = float("nan"), **extra) -> dict:
    out = {"name": name, "value": complex(value), "error": error, "theorem_tag": theorem,
           "oracle": complex(oracle), "discrepancy": disc}
    out.update(extra)
    return out


def _rel_pass(formula: complex, oracle: complex, tol: float, floor: float) -> bool:
    """Relative agreement, with an absolute floor for formula values that vanish."""
    if not (math.isfinite(abs(formula)) and math.isfinite(abs(oracle))):
        return False
    return abs(formula - oracle) <= tol * abs(formula) + floor


# ---------------------------------------------------------------------------
# Jobs


class Runner:
    def __init__(self, cfg: JobConfig, threads: int, seed: int):
        self.cfg = cfg
        self.sig = cfg.signature
        self.phi = cfg.test_function
        self.tol = cfg.tolerances.quad_tol
        self.threads = threads
        self.seed = seed
        # quadrature noise level of an oracle value
        self.floor = 100.0 * self.tol

    def continued(self, lam: complex):
        return dist.pair_plambda_continued(self.sig, lam, self.phi, self.tol,
                                           pole_guard=self.cfg.tolerances.pole_guard)

    def pairing(self) -> List[dict]:
        lam = self.cfg.params.lam
        res = self.continued(lam)
        extra = {}
        oracle = complex("nan")
        if lam.real > 0 or lam == 0:
            o = orthant_oracle(self.phi, self.sig, "cone", lam, tol=max(self.tol, 1e-10))
            oracle = o.value
            extra["oracle_error"] = o.abs_error
        disc = abs(res.value - oracle)
        return [_entry("pairing", res.value, res.abs_error_estimate, "", oracle, disc,
                       **{"lambda": lam, "continuation_k": dist.continuation_order(lam)}, **extra)]

    def delta(self) -> List[dict]:
        p = self.cfg.params
        variant = DeltaConeVariant(Variant(p.variant), p.k)
        res = dist.pair_delta(self.sig, variant, self.phi, min(self.tol, 1e-10))
        terms = dist.delta_radial_terms(self.sig, variant, dist.psi_profile(self.phi, self.sig))
        closed = dist.delta_closed_form(terms)
        return [_entry(f"delta^({p.k}) {p.variant}", res.value, res.abs_error_estimate, "", closed,
                       abs(res.value - closed), k=p.k, variant=p.variant,
                       regularized=bool(p.k >= self.sig.half_total - 1.0))]

    def _residue_entry(self, rep, name: str) -> dict:
        tol = self.cfg.tolerances.residue_tol
        applicable = rep.theorem is not Theorem.UNSUPPORTED
        passed = _rel_pass(rep.formula_value, rep.oracle_value, tol, self.floor) if applicable else None
        return _entry(name, rep.formula_value, rep.details.get("extrapolation_change", float("nan")),
                      rep.theorem.value, rep.oracle_value, rep.discrepancy, pole=rep.pole,
                      routing=rep.routing, applicable=applicable, passed=passed,
                      details=dict(rep.details))

    def residue(self) -> List[dict]:
        p, o = self.cfg.params, self.cfg.oracle
        if p.series == "first":
            if p.k < 1:
                raise ValidationError("first-series residues need k >= 1")
            rep = dist.residue_first_series(self.sig, p.k, self.phi, self.tol, o.richardson_eps, self.threads)
        else:
            rep = dist.residue_second_series(self.sig, p.k, self.phi, self.tol, o.richardson_eps,
                                             self.threads, o.circle_radius, o.circle_points)
        return [self._residue_entry(rep, f"residue {p.series} k={p.k}")]

    def _laurent_entries(self, k: int) -> List[dict]:
        o = self.cfg.oracle
        tol = self.cfg.tolerances.residue_tol
        fit, rep = dist.laurent_double_pole(self.sig, k, self.phi, self.tol, o.circle_radius,
                                            o.circle_points, self.threads)
        d = rep.details
        gating = not d["exploratory"]
        if d["order"] == 2:
            c2_pass = _rel_pass(d["c_minus2_formula"], d["c_minus2_oracle"], tol, self.floor)
            c2_name = f"T3 k={k} c_-2"
        else:
            c2_pass = abs(fit.c_minus2) < 1e-3 * abs(fit.c_minus1)
            c2_name = f"T3 k={k} c_-2 vanishes (simple pole)"
        c1_pass = _rel_pass(rep.formula_value, rep.oracle_value, tol, self.floor)
        common = {"pole": rep.pole, "routing": rep.routing, "order": d["order"], "fit_order": fit.order,
                  "applicable": True, "exploratory": d["exploratory"]}
        return [
            _entry(c2_name, d["c_minus2_formula"], fit.coeff_error, "T3", d["c_minus2_oracle"],
                   d["c_minus2_discrepancy"], passed=c2_pass if gating else None, **common),
            _entry(f"T3 k={k} c_-1", rep.formula_value, fit.coeff_error, "T3", rep.oracle_value,
                   rep.discrepancy, passed=c1_pass if gating else None,
                   theta=d["theta"], theta_literal=d["theta_literal"],
                   c_minus1_literal=d["c_minus1_literal"], c_0=fit.c_0, **common),
        ]

    def laurent(self) -> List[dict]:
        return self._laurent_entries(self.cfg.params.k)

    def sweep(self) -> List[dict]:
        sw = self.cfg.params.sweep
        if sw is None:
            raise ValidationError("sweep jobs need params.sweep {re_from, re_to, steps, im}")
        if sw.steps == 1:
            lams = [complex(sw.re_from, sw.im)]
        else:
            lams = [complex(x, sw.im) for x in np.linspace(sw.re_from, sw.re_to, sw.steps)]
        guard = self.cfg.tolerances.pole_guard

        def one(lam):
            if distance_to_poles(self.sig, lam) < guard:
                return None
            return self.continued(lam)

        vals = dist.parallel_map(one, lams, self.threads)
        rows = []
        for lam, r in zip(lams, vals):
            if r is None:
                rows.append(_entry("sweep", complex("nan"), float("nan"),
                                   **{"lambda": lam, "skipped": "pole_guard"}))
            else:
                rows.append(_entry("sweep", r.value, r.abs_error_estimate, **{"lambda": lam}))
        return rows

    def verify(self) -> List[dict]:
        sig, phi, kmax = self.sig, self.phi, self.cfg.params.k_max
        o = self.cfg.oracle
        out: List[dict] = []
        for k in range(1, kmax + 1):
            rep = dist.residue_first_series(sig, k, phi, self.tol, o.richardson_eps, self.threads)
            out.append(self._residue_entry(rep, f"T1 k={k}"))
        if dist.is_integer(sig.half_total):
            out.extend(self._laurent_entries(0))
        else:
            for k in range(kmax):
                rep = dist.residue_second_series(sig, k, phi, self.tol, o.richardson_eps, self.threads)
                out.append(self._residue_entry(rep, f"T2 k={k}"))
        rng = np.random.default_rng(self.seed)
        for i in range(2):
            lam = complex(round(rng.uniform(0.1, 2.0), 6), round(rng.uniform(-1.0, 1.0), 6))
            lhs = dist.pair_plambda_direct(sig, lam, phi, self.tol * 0.1).value
            rhs = dist.pair_plambda_continued(sig, lam, phi, self.tol * 0.1, k=1, pole_guard=0.0).value
            gap = relative_difference(lhs, rhs)
            out.append(_entry(f"Green recursion #{i}", lhs, float("nan"), "", rhs, gap,
                              **{"lambda": lam, "applicable": True, "passed": gap <= GREEN_TOL}))
        k = 0
        while k < sig.half_total - 1.0 - 1e-9:
            r = dist.pair_delta(sig, DeltaConeVariant(Variant.OUTER_R, k), phi, 1e-11).value
            s = dist.pair_delta(sig, DeltaConeVariant(Variant.OUTER_S, k), phi, 1e-11).value
            gap = abs(r - s)
            ok = gap <= REGULARIZATION_TOL * max(abs(r), abs(s)) or gap <= 1e-10
            out.append(_entry(f"regularization agreement k={k}", r, float("nan"), "", s,
                              gap, k=k, applicable=True, passed=ok))
            k += 1
        return out


def build_report(cfg: JobConfig, job: str, threads: int, seed: int) -> Dict[str, Any]:
    runner = Runner(cfg, threads, seed)
    results = getattr(runner, job)()
    checks = [r for r in results if r.get("passed") is not None]
    report = {
        "job": job,
        "inputs": cfg.to_dict(),
        "seed": seed,
        "parity": {k: v.cls.value for k, v in cfg.signature.parities().items()},
        "results": results,
    }
    if job == "verify":
        report["all_passed"] = all(r["passed"] for r in checks)
    return report


def write_sweep_csv(path: str, results: List[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["re_lambda", "im_lambda", "re_value", "im_value", "abs_error"])
        for r in results:
            lam, val = r["lambda"], r["value"]
            w.writerow([repr(lam.real), repr(lam.imag), repr(val.real), repr(val.imag), repr(float(r["error"]))])


# ---------------------------------------------------------------------------
# argparse


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to the JSON job configuration")
    common.add_argument("--output", help="report path (default: config 'output', else standard output)")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads for sample evaluation (default: all cores)")
    common.add_argument("--quad-tol", type=float, help="override tolerances.quad_tol")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized verify checks")
    common.add_argument("--timing", action="store_true", help="add runtime_ms to the report")
    parser = argparse.ArgumentParser(prog="wdist", description="Weighted ultra-hyperbolic generalized functions.")
    sub = parser.add_subparsers(dest="command", required=True)
    for job in JOBS:
        sub.add_parser(job, parents=[common], help=f"run a {job} job")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        cfg = load_config(args.config)
        if args.quad_tol is not None:
            if not args.quad_tol > 0:
                raise ValidationError("--quad-tol must be positive")
            cfg = replace(cfg, tolerances=replace(cfg.tolerances, quad_tol=args.quad_tol))
        if args.threads < 1:
            raise ValidationError("--threads must be >= 1")
        cfg = replace(cfg, job=args.command)
        output = args.output or cfg.output
        if args.command == "sweep" and not output:
            raise ValidationError("sweep jobs need --output (the CSV goes next to the report)")
        report = build_report(cfg, args.command, args.threads, args.seed)
    except (ValidationError, DomainError, PoleProximity, PoleHit) as exc:
        print(f"wdist: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NoConvergence as exc:
        print(f"wdist: no convergence: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except WdistError as exc:
        print(f"wdist: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.timing:
        report["runtime_ms"] = round((time.perf_counter() - start) * 1000.0, 3)
    text = json.dumps(_jsonable(report), indent=2) + "\n"
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
        if args.command == "sweep":
            root, _ = os.path.splitext(output)
            write_sweep_csv(root + ".csv", report["results"])
    else:
        sys.stdout.write(text)
    if args.command == "verify" and not report["all_passed"]:
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
