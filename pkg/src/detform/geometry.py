"""Coordinates on the plane x + y + z = 0 and the shared PV kernel.

Both space-side and frequency-side evaluators integrate a function
``Phi(x, y, z)`` (x, y, z in R^2, x + y + z = 0) against
``det(1 1 1; x y z)^{-1}``.  Writing the first coordinates as
``lambda e + mu e_perp`` and the second coordinates as ``rho e`` with
``e = e(theta)`` a unit vector in the plane, the determinant is
``sqrt(3) mu rho`` and the Hausdorff measure is ``rho drho dtheta dlambda dmu``,
so ::

    pv int_V Phi / det  =  (1/sqrt3) int dtheta drho dlambda dmu  [Phi - Phi*] / (2 mu)

where ``Phi*`` flips the sign of ``mu``.  :func:`plane_pv_integral` returns the
four-fold integral on the right (without the 1/sqrt3).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .quadrature import EvalResult, QuadratureSpec, integrate_box

SQRT3 = math.sqrt(3.0)
ONES = np.ones(3) / SQRT3
P1 = np.array([1.0, -1.0, 0.0]) / math.sqrt(2.0)
P2 = np.array([1.0, 1.0, -2.0]) / math.sqrt(6.0)

__all__ = [
    "SQRT3",
    "DirectCoords",
    "ReflectionTriple",
    "plane_frame",
    "reflect",
    "det_value",
    "det3",
    "singular_angles",
    "plane_pv_integral",
    "plane_radius",
]


def plane_frame(theta):
    """Unit vectors e(theta) and e_perp(theta) = e x (1,1,1)/sqrt3, shape (..., 3)."""
    theta = np.asarray(theta, dtype=float)
    e = np.cos(theta)[..., None] * P1 + np.sin(theta)[..., None] * P2
    ep = np.cross(e, ONES)
    return e, ep


def singular_angles() -> np.ndarray:
    """The six angles in [0, 2 pi) where a component of e(theta) vanishes."""
    out = []
    for i in range(3):
        # cos t P1[i] + sin t P2[i] = 0
        t = math.atan2(-P1[i], P2[i])
        out += [t % (2 * math.pi), (t + math.pi) % (2 * math.pi)]
    return np.sort(np.array(out))


@dataclass(frozen=True)
class DirectCoords:
    theta: float
    rho: float
    lam: float
    mu: float

    @property
    def frame(self):
        return plane_frame(self.theta)

    def points(self):
        """(x, y, z) as three points in R^2."""
        e, ep = self.frame
        v1 = self.lam * e + self.mu * ep
        v2 = self.rho * e
        return np.stack([v1, v2], axis=1)


@dataclass(frozen=True)
class ReflectionTriple:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def as_array(self):
        return np.stack([self.x, self.y, self.z])


def reflect(coords: DirectCoords) -> ReflectionTriple:
    """Starred triple: the e_perp component of the first coordinates flips."""
    e, ep = coords.frame
    v1 = coords.lam * e - coords.mu * ep
    v2 = coords.rho * e
    pts = np.stack([v1, v2], axis=1)
    return ReflectionTriple(pts[0], pts[1], pts[2])


def det3(x, y, z) -> np.ndarray:
    """det(1 1 1; x y z) for points of shape (..., 2)."""
    x, y, z = (np.asarray(a, dtype=float) for a in (x, y, z))
    return (y[..., 0] * z[..., 1] - z[..., 0] * y[..., 1]
            - x[..., 0] * z[..., 1] + z[..., 0] * x[..., 1]
            + x[..., 0] * y[..., 1] - y[..., 0] * x[..., 1])


def det_value(coords: DirectCoords) -> float:
    if coords.rho <= 0:
        raise ValueError("rho must be positive")
    return coords.mu * coords.rho * SQRT3


def plane_radius(boxes) -> float:
    """Bound on |(a1, a2, a3)| for a_i ranging over three intervals.

    The squared norm is convex, so its maximum sits at a corner.
    """
    best = 0.0
    for corner in itertools.product(*boxes):
        best = max(best, sum(c * c for c in corner))
    return math.sqrt(best)


def plane_radius_centered(boxes) -> float:
    """Bound on the norm of the projection of (a1, a2, a3) onto the plane sum = 0."""
    best = 0.0
    for corner in itertools.product(*boxes):
        m = sum(corner) / 3.0
        best = max(best, sum((c - m) ** 2 for c in corner))
    return math.sqrt(best)


def plane_pv_integral(phi, rho_max: float, lam_max: float, quad: QuadratureSpec,
                      *, route: str = "plane", ncomp: int = 1) -> EvalResult:
    """int_0^{2pi} dtheta int_0^rho_max drho int dlambda int dmu (Phi - Phi*) / (2 mu).

    ``phi(x, y, z)`` takes three (n, 2) arrays and returns (n,) or (n, m).
    The symmetrised integrand is even in mu, so only mu > 0 is visited.
    """
    def integrand(pts):
        th, rho, lam, mu = pts[:, 0], pts[:, 1], pts[:, 2], pts[:, 3]
        mu = np.maximum(mu, 1e-300)
        e, ep = plane_frame(th)
        v2 = rho[:, None] * e
        v1p = lam[:, None] * e + mu[:, None] * ep
        v1m = lam[:, None] * e - mu[:, None] * ep
        a = phi(*_split(v1p, v2))
        b = phi(*_split(v1m, v2))
        q = (a - b) / (mu if np.ndim(a) == 1 else mu[:, None])
        return q

    lo = [0.0, 0.0, -lam_max, 0.0]
    hi = [2 * math.pi, rho_max, lam_max, lam_max]
    vals, err, info = integrate_box(
        integrand, lo, hi, rel_tol=quad.rel_tol, abs_tol=quad.abs_tol,
        max_depth=quad.max_depth, max_evals=quad.max_evals, initial_splits=[12, 4, 4, 2],
    )
    res = EvalResult(vals[0], err, route, info)
    res.diagnostics["components"] = vals
    return res


def _split(v1, v2):
    x = np.stack([v1[:, 0], v2[:, 0]], axis=1)
    y = np.stack([v1[:, 1], v2[:, 1]], axis=1)
    z = np.stack([v1[:, 2], v2[:, 2]], axis=1)
    return x, y, z
