"""Job configuration: a strict JSON document with every default materialized.

Schema (all keys other than ``signature`` and ``test_function`` optional)::

    {
      "signature": {"p": 2, "q": 2, "gamma_plus": [1, 1], "gamma_minus": [1, 1]},
      "test_function": [{"coeff": [1, 0], "exponents": [0, 0, 0, 0], "sigma": 1.0}],
      "job": "pairing",
      "params": {"lambda": [1, 0], "k": 0, "variant": "OuterR", "series": "first",
                 "k_max": 2, "sweep": {"re_from": 0.1, "re_to": 2, "steps": 20, "im": 0}},
      "tolerances": {"quad_tol": 1e-9, "residue_tol": 1e-4, "pole_guard": 0.02},
      "oracle": {"circle_radius": 0.1, "circle_points": 8, "richardson_eps": [0.1, 0.05, 0.025]},
      "output": null
    }

Unknown keys at any level are errors.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

from .core import Signature, ValidationError
from .testfn import TestFunction

JOBS = ("pairing", "delta", "residue", "laurent", "sweep", "verify")
VARIANTS = ("OuterR", "OuterS")
SERIES = ("first", "second")


def _check_keys(section: str, data: Any, allowed) -> dict:
    if not isinstance(data, dict):
        raise ValidationError(f"{section} must be an object")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ValidationError(f"unknown key(s) in {section}: {', '.join(unknown)}")
    return data


def _real(section: str, v: Any) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(f"{section} must be a number (got {v!r})")
    v = float(v)
    if not math.isfinite(v):
        raise ValidationError(f"{section} must be finite")
    return v


def _positive(section: str, v: Any) -> float:
    v = _real(section, v)
    if v <= 0:
        raise ValidationError(f"{section} must be positive (got {v})")
    return v


def _int(section: str, v: Any, minimum: int = 0) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValidationError(f"{section} must be an integer (got {v!r})")
    if v < minimum:
        raise ValidationError(f"{section} must be >= {minimum} (got {v})")
    return v


def _complex(section: str, v: Any) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(_real(section, v), 0.0)
    if not (isinstance(v, list) and len(v) == 2):
        raise ValidationError(f"{section} must be [re, im] (got {v!r})")
    return complex(_real(section, v[0]), _real(section, v[1]))


@dataclass(frozen=True)
class Sweep:
    re_from: float
    re_to: float
    steps: int
    im: float = 0.0

    @classmethod
    def from_dict(cls, d: dict) -> "Sweep":
        d = _check_keys("params.sweep", d, ("re_from", "re_to", "steps", "im"))
        for key in ("re_from", "re_to", "steps"):
            if key not in d:
                raise ValidationError(f"params.sweep.{key} is required")
        return cls(_real("re_from", d["re_from"]), _real("re_to", d["re_to"]),
                   _int("steps", d["steps"], 1), _real("im", d.get("im", 0.0)))

    def to_dict(self) -> dict:
        return {"re_from": self.re_from, "re_to": self.re_to, "steps": self.steps, "im": self.im}


@dataclass(frozen=True)
class Params:
    lam: complex = 1.0 + 0j
    k: int = 0
    variant: str = "OuterR"
    series: str = "first"
    k_max: int = 2
    sweep: Optional[Sweep] = None

    @classmethod
    def from_dict(cls, d: dict) -> "Params":
        d = _check_keys("params", d, ("lambda", "k", "variant", "series", "k_max", "sweep"))
        variant = d.get("variant", "OuterR")
        if variant not in VARIANTS:
            raise ValidationError(f"params.variant must be one of {VARIANTS} (got {variant!r})")
        series = d.get("series", "first")
        if series not in SERIES:
            raise ValidationError(f"params.series must be one of {SERIES} (got {series!r})")
        sweep = Sweep.from_dict(d["sweep"]) if d.get("sweep") is not None else None
        return cls(_complex("params.lambda", d.get("lambda", [1.0, 0.0])), _int("params.k", d.get("k", 0)),
                   variant, series, _int("params.k_max", d.get("k_max", 2), 1), sweep)

    def to_dict(self) -> dict:
        return {"lambda": [self.lam.real, self.lam.imag], "k": self.k, "variant": self.variant,
                "series": self.series, "k_max": self.k_max,
                "sweep": None if self.sweep is None else self.sweep.to_dict()}


@dataclass(frozen=True)
class Tolerances:
    quad_tol: float = 1e-9
    residue_tol: float = 1e-4
    pole_guard: float = 0.02

    @classmethod
    def from_dict(cls, d: dict) -> "Tolerances":
        d = _check_keys("tolerances", d, ("quad_tol", "residue_tol", "pole_guard"))
        dflt = cls()
        return cls(_positive("quad_tol", d.get("quad_tol", dflt.quad_tol)),
                   _positive("residue_tol", d.get("residue_tol", dflt.residue_tol)),
                   _positive("pole_guard", d.get("pole_guard", dflt.pole_guard)))

    def to_dict(self) -> dict:
        return {"quad_tol": self.quad_tol, "residue_tol": self.residue_tol, "pole_guard": self.pole_guard}


@dataclass(frozen=True)
class OracleSettings:
    circle_radius: float = 0.1
    circle_points: int = 8
    richardson_eps: Tuple[float, ...] = (0.1, 0.05, 0.025)

    @classmethod
    def from_dict(cls, d: dict) -> "OracleSettings":
        d = _check_keys("oracle", d, ("circle_radius", "circle_points", "richardson_eps"))
        dflt = cls()
        eps = d.get("richardson_eps", list(dflt.richardson_eps))
        if not (isinstance(eps, list) and len(eps) >= 2):
            raise ValidationError("oracle.richardson_eps must list at least two step sizes")
        eps = tuple(_positive("richardson_eps", e) for e in eps)
        return cls(_positive("circle_radius", d.get("circle_radius", dflt.circle_radius)),
                   _int("circle_points", d.get("circle_points", dflt.circle_points), 6), eps)

    def to_dict(self) -> dict:
        return {"circle_radius": self.circle_radius, "circle_points": self.circle_points,
                "richardson_eps": list(self.richardson_eps)}


@dataclass(frozen=True)
class JobConfig:
    signature: Signature
    test_function: TestFunction
    job: str = "verify"
    params: Params = field(default_factory=Params)
    tolerances: Tolerances = field(default_factory=Tolerances)
    oracle: OracleSettings = field(default_factory=OracleSettings)
    output: Optional[str] = None

    @classmethod
    def from_dict(cls, d: dict) -> "JobConfig":
        d = _check_keys("config", d, ("signature", "test_function", "job", "params", "tolerances",
                                      "oracle", "output"))
        for key in ("signature", "test_function"):
            if key not in d:
                raise ValidationError(f"config needs a '{key}' section")
        s = _check_keys("signature", d["signature"], ("p", "q", "gamma_plus", "gamma_minus"))
        for key in ("p", "q", "gamma_plus", "gamma_minus"):
            if key not in s:
                raise ValidationError(f"signature.{key} is required")
        sig = Signature(s["p"], s["q"], tuple(s["gamma_plus"]), tuple(s["gamma_minus"]))
        records = d["test_function"]
        if not isinstance(records, list) or not records:
            raise ValidationError("test_function must be a non-empty list of term records")
        for r in records:
            _check_keys("test_function term", r, ("coeff", "exponents", "sigma"))
        phi = TestFunction.from_records(records)
        if phi.n != sig.n:
            raise ValidationError(f"test function terms have {phi.n} exponents, signature needs n={sig.n}")
        job = d.get("job", "verify")
        if job not in JOBS:
            raise ValidationError(f"job must be one of {JOBS} (got {job!r})")
        output = d.get("output")
        if output is not None and not isinstance(output, str):
            raise ValidationError("output must be a path string or null")
        return cls(sig, phi, job, Params.from_dict(d.get("params", {})),
                   Tolerances.from_dict(d.get("tolerances", {})),
                   OracleSettings.from_dict(d.get("oracle", {})), output)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "signature": self.signature.to_dict(),
            "test_function": self.test_function.to_records(),
            "job": self.job,
            "params": self.params.to_dict(),
            "tolerances": self.tolerances.to_dict(),
            "oracle": self.oracle.to_dict(),
            "output": self.output,
        }

    def with_overrides(self, **kw) -> "JobConfig":
        return replace(self, **kw)


def load_config(path: str) -> JobConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
    return JobConfig.from_dict(data)


def dumps_config(cfg: JobConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2)
