"""Numerical evaluation of a determinantal trilinear singular integral form."""

from .quadrature import EvalResult, QuadratureSpec
from .schwartz import (ExponentTriple, GaussianAtom, SchwartzMix, SpectrumFunction, fourier,
                       lp_norm, mixed_norm, projective_spectrum)
from .direct import lambda_direct
from .frequency import lambda_frequency
from .fiberwise import bht_form, hoelder_certificate, lambda_fiberwise
from .golden import golden_triple, random_triple
from .routes import ROUTES, evaluate
from .commutator import commutator_direct, commutator_kappa, commutator_via_lambda
from .sharpness import CounterexampleSpec, lambda_counterexample_terms

__all__ = [
    "EvalResult",
    "QuadratureSpec",
    "GaussianAtom",
    "SchwartzMix",
    "SpectrumFunction",
    "ExponentTriple",
    "fourier",
    "lp_norm",
    "mixed_norm",
    "projective_spectrum",
    "lambda_direct",
    "lambda_frequency",
    "lambda_fiberwise",
    "bht_form",
    "hoelder_certificate",
    "golden_triple",
    "random_triple",
    "ROUTES",
    "evaluate",
    "commutator_direct",
    "commutator_kappa",
    "commutator_via_lambda",
    "CounterexampleSpec",
    "lambda_counterexample_terms",
]
