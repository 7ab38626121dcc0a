"""Weighted ultra-hyperbolic generalized functions with numerical oracles."""
from .core import (
    DomainError,
    IllConditioned,
    LaurentExpansion,
    NoConvergence,
    PairingResult,
    PoleError,
    PoleHit,
    PoleProximity,
    ResidueReport,
    Series,
    Signature,
    Theorem,
    ValidationError,
    WdistError,
    classify_parity,
    pole_series,
)
from .dist import (
    DeltaConeVariant,
    Variant,
    laurent_circle_fit,
    laurent_double_pole,
    pair_delta,
    pair_delta_origin,
    pair_plambda_continued,
    pair_plambda_direct,
    residue_first_series,
    residue_second_series,
)
from .testfn import TestFunction, apply_bessel, apply_LB, evaluate, psi_profile

__version__ = "0.1.0"
