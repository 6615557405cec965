"""Executable symmetry checks: two evaluator calls and their discrepancy."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .frequency import lambda_frequency
from .quadrature import EvalResult, QuadratureSpec
from .routes import evaluate
from .schwartz import SpectrumFunction, dilate, fourier, modulate, projective_spectrum

__all__ = [
    "SymmetryReport",
    "harness_tolerance",
    "check_dilation",
    "check_modulation",
    "check_permutations",
    "check_projective",
    "ROTATION",
]

# the quarter turn in the (xi_0, xi_1) plane of the projective coordinates
ROTATION = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])

REL_FLOOR = 1e-3
ERR_FACTOR = 3.0


def harness_tolerance(lhs: EvalResult, rhs: EvalResult, scale: float | None = None) -> float:
    """max(1e-3 |Lambda|, 3 x combined error estimates)."""
    if scale is None:
        scale = max(abs(lhs.value), abs(rhs.value))
    return max(REL_FLOOR * scale, ERR_FACTOR * (lhs.error_estimate + rhs.error_estimate))


@dataclass
class SymmetryReport:
    name: str
    lhs: EvalResult
    rhs: EvalResult
    abs_diff: float
    rel_diff: float
    tolerance: float
    passed: bool
    params: dict = field(default_factory=dict)

    @classmethod
    def compare(cls, name, lhs: EvalResult, rhs: EvalResult, params=None, scale=None) -> "SymmetryReport":
        diff = abs(lhs.value - rhs.value)
        ref = max(abs(lhs.value), abs(rhs.value))
        tol = harness_tolerance(lhs, rhs, scale)
        rel = diff / ref if ref > 0 else 0.0
        return cls(name, lhs, rhs, float(diff), float(rel), float(tol), bool(diff <= tol), params or {})

    def to_record(self) -> dict:
        return {
            "check": self.name,
            "params": self.params,
            "lhs": self.lhs.to_record(),
            "rhs": self.rhs.to_record(),
            "abs_diff": self.abs_diff,
            "rel_diff": self.rel_diff,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


def _listify(a):
    return np.asarray(a).tolist()


def check_dilation(f, g, h, A, route: str, quad: QuadratureSpec, *, base: EvalResult | None = None) -> SymmetryReport:
    A = np.asarray(A, dtype=float)
    rhs = base if base is not None else evaluate(route, f, g, h, quad)
    if np.array_equal(A, np.eye(2)):
        lhs = rhs
    else:
        lhs = evaluate(route, dilate(f, A), dilate(g, A), dilate(h, A), quad)
    return SymmetryReport.compare("dilation", lhs, rhs, {"A": _listify(A), "route": route,
                                                         "det": float(np.linalg.det(A))})


def check_modulation(f, g, h, b, route: str, quad: QuadratureSpec, *, base: EvalResult | None = None) -> SymmetryReport:
    b = np.asarray(b, dtype=float)
    rhs = base if base is not None else evaluate(route, f, g, h, quad)
    if not np.any(b):
        lhs = rhs
    else:
        lhs = evaluate(route, modulate(f, b), modulate(g, b), modulate(h, b), quad)
    return SymmetryReport.compare("modulation", lhs, rhs, {"b": _listify(b), "route": route})


# signs of the six orderings relative to (f, g, h)
_PERMS = [((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
          ((1, 0, 2), -1), ((2, 1, 0), -1), ((0, 2, 1), -1)]


def check_permutations(f, g, h, route: str, quad: QuadratureSpec) -> list[SymmetryReport]:
    """sign(pi) Lambda(pi(f, g, h)) against Lambda(f, g, h) for all six orderings."""
    fns = (f, g, h)
    base = evaluate(route, f, g, h, quad)
    out = []
    for perm, sign in _PERMS:
        if perm == (0, 1, 2):
            val = base
        else:
            val = evaluate(route, *(fns[i] for i in perm), quad).scaled(sign)
        rep = SymmetryReport.compare("permutation", val, base, {"perm": list(perm), "sign": sign,
                                                                "route": route})
        out.append(rep)
    return out


def check_alternating(f, h, route: str, quad: QuadratureSpec) -> SymmetryReport:
    """Lambda(f, f, h) against zero."""
    val = evaluate(route, f, f, h, quad)
    zero = EvalResult(0.0, 0.0, "exact")
    tol_scale = 0.0
    rep = SymmetryReport.compare("alternating", val, zero, {"route": route}, scale=tol_scale)
    return rep


def _spectra(fns, level):
    return [SpectrumFunction.from_mix(fourier(m), level=level) for m in fns]


def check_projective(f, g, h, M, quad: QuadratureSpec, *, base: EvalResult | None = None,
                     level: float = 1e-16) -> SymmetryReport:
    """Frequency route on projectively transformed spectra against the original.

    ``level`` sets the envelope boxes of the spectra; non-affine M leaves no
    closed form, and a looser level keeps the tensor rule for the translation
    integral affordable.
    """
    M = np.asarray(M, dtype=float)
    spectra = _spectra((f, g, h), level)
    rhs = base if base is not None else lambda_frequency(*spectra, quad)
    moved = [projective_spectrum(s, M) for s in spectra]
    if all(a is b for a, b in zip(moved, spectra)):
        lhs = rhs
    else:
        lhs = lambda_frequency(*moved, quad)
    return SymmetryReport.compare("projective", lhs, rhs, {"M": _listify(M), "level": level})
