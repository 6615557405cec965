"""Route dispatch shared by the symmetry harness and the CLI."""

from __future__ import annotations

from .direct import lambda_direct
from .fiberwise import lambda_fiberwise
from .frequency import lambda_frequency
from .quadrature import EvalResult, QuadratureSpec
from .schwartz import fourier

ROUTES = ("direct", "frequency", "fiberwise")


def evaluate(route: str, f, g, h, quad: QuadratureSpec) -> EvalResult:
    if route == "direct":
        return lambda_direct(f, g, h, quad)
    if route == "frequency":
        return lambda_frequency(fourier(f), fourier(g), fourier(h), quad)
    if route == "fiberwise":
        return lambda_fiberwise(f, g, h, quad)
    raise ValueError(f"unknown route {route!r}; expected one of {ROUTES}")
