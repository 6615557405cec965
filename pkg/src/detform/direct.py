"""Space-side evaluation of the determinantal trilinear form.

    Lambda(f, g, h) = p.v. int f(x) g(y) h(z) delta(x+y+z) det(1 1 1; x y z)^{-1}

The two-dimensional delta restricted to the plane V = {x+y+z = 0} equals one
third of the Hausdorff measure on V (two factors of |(1,1,1)| = sqrt3).  With
the polar frame of :mod:`detform.geometry` this gives

    Lambda = (1 / (3 sqrt3)) int dtheta drho dlambda dmu (phi - phi*) / (2 mu)

with phi = f (x) g (y) h (z).
"""

from __future__ import annotations

from .geometry import SQRT3, plane_pv_integral, plane_radius
from .quadrature import EvalResult, QuadratureSpec
from .schwartz import SchwartzMix

__all__ = ["lambda_direct", "DIRECT_PREFACTOR"]

DIRECT_PREFACTOR = 1.0 / (3.0 * SQRT3)


def _check(*mixes):
    for m in mixes:
        if not isinstance(m, SchwartzMix) or m.dim != 2:
            raise TypeError("lambda_direct needs two-dimensional SchwartzMix inputs")


def lambda_direct(f: SchwartzMix, g: SchwartzMix, h: SchwartzMix, quad: QuadratureSpec) -> EvalResult:
    _check(f, g, h)
    if min(len(f), len(g), len(h)) == 0:
        return EvalResult(0.0, 0.0, "direct", {"cells": 0, "converged": True})
    level = quad.tail_level
    boxes = [m.support_box(level) for m in (f, g, h)]
    first = [(b[0][0], b[1][0]) for b in boxes]
    second = [(b[0][1], b[1][1]) for b in boxes]
    lam_max = plane_radius(first)
    rho_max = plane_radius(second)

    def phi(x, y, z):
        return f.evaluate(x) * g.evaluate(y) * h.evaluate(z)

    q = quad.with_(abs_tol=quad.abs_tol / DIRECT_PREFACTOR)
    res = plane_pv_integral(phi, rho_max, lam_max, q, route="direct")
    # tail: each discarded region has one factor below `level`
    amp = f.max_abs_amplitude() * g.max_abs_amplitude() * h.max_abs_amplitude()
    tail = level * amp / max(min(x.max_abs_amplitude() for x in (f, g, h)), 1e-300)
    out = res.scaled(DIRECT_PREFACTOR, route="direct")
    out.diagnostics.update({"lam_max": lam_max, "rho_max": rho_max, "tail_error": tail})
    out.diagnostics.pop("components", None)
    out.error_estimate += tail
    return out
