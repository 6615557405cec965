"""Fiberwise evaluation: the form as an average of one-dimensional BHT forms.

Fix the second coordinates (x2, y2, z2), x2 + y2 + z2 = 0, and rescale the
first coordinates along each fiber, x1 = u x2, y1 = v y2, z1 = w z2.  With
f~(u) = sgn(x2) f(u x2, x2) (and likewise for g, h) the inner integral is

    sgn(z2) int f~(u) g~(v) h~(w) du dv / (u - v),   w = -(x2 u + y2 v) / z2,

and (u, v, w) = (s + t, s + kappa t, s) with kappa = -x2/y2 turns it into
-sgn(y2) times three times the dual BHT form.  The outer measure dx2 dy2 is
rho drho dtheta / sqrt3 in the polar frame of the plane.

Numerically the PV variable is d = u - v = (1 - kappa) t (same symmetric
truncation, same dt/t), and the non-singular variable is anchored on
whichever of u, v, w has the shortest interval, which keeps the integration
box small near the six singular angles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import SQRT3, plane_frame, singular_angles
from .quadrature import EvalResult, QuadratureSpec, compensated_sum, integrate_box
from .schwartz import ExponentTriple, SchwartzMix, SingularPointError, lp_norm, scaled_fiber

__all__ = [
    "FiberContext",
    "kappa_of",
    "det_st_identity",
    "bht_form",
    "lambda_fiberwise",
    "hoelder_certificate",
    "angular_constant",
    "fiber_norm_scaling",
]


class DegenerateFiberError(ValueError):
    pass


def kappa_of(a: float, b: float) -> float:
    if b == 0:
        raise DegenerateFiberError("kappa is undefined for b = 0")
    return -a / b


@dataclass(frozen=True)
class FiberContext:
    x2: float
    y2: float
    z2: float
    f: SchwartzMix
    g: SchwartzMix
    h: SchwartzMix

    @classmethod
    def build(cls, f, g, h, theta: float, rho: float) -> "FiberContext":
        e, _ = plane_frame(theta)
        x2, y2, z2 = (rho * e).tolist()
        return cls(x2, y2, z2, scaled_fiber(f, x2), scaled_fiber(g, y2), scaled_fiber(h, z2))

    @property
    def abc(self) -> np.ndarray:
        v = np.array([self.x2, self.y2, self.z2])
        return v / np.linalg.norm(v)

    @property
    def uvw(self) -> np.ndarray:
        return np.cross(np.ones(3) / SQRT3, self.abc)

    @property
    def kappa(self) -> float:
        return kappa_of(self.x2, self.y2)

    def kappa_from_frame(self) -> float:
        u, v, w = self.uvw
        if u == w:
            raise DegenerateFiberError("u = w")
        return (v - w) / (u - w)

    @property
    def orientation(self) -> float:
        """Sign in front of the BHT form: -sgn(y2)."""
        return -math.copysign(1.0, self.y2)


def det_st_identity(a, b, c, u, v, w, s, t) -> float:
    """det(1 1 1; 1/a 1/b 1/c; s+ut s+vt s+wt); equals 3 sqrt3 t on a unit frame."""
    if a == 0 or b == 0 or c == 0:
        raise DegenerateFiberError("a frame component vanishes")
    m = np.array([[1.0, 1.0, 1.0],
                  [1.0 / a, 1.0 / b, 1.0 / c],
                  [s + u * t, s + v * t, s + w * t]])
    return float(np.linalg.det(m))


def _ev1(mix, x):
    return mix.evaluate(x[:, None])


def _interval(mix: SchwartzMix, level: float):
    a, b = mix.support_interval(level)
    return a, b


def bht_form(ft: SchwartzMix, gt: SchwartzMix, ht: SchwartzMix, kappa: float,
             quad: QuadratureSpec) -> EvalResult:
    """(1/3) int (p.v. int ft(s+t) gt(s+kappa t) dt/t) ht(s) ds for 1-D mixes."""
    if not math.isfinite(kappa):
        raise ValueError("kappa must be finite")
    if min(len(ft), len(gt), len(ht)) == 0:
        return EvalResult(0.0, 0.0, "bht", {"converged": True})
    level = quad.tail_level
    F, G, H = (_interval(m, level) for m in (ft, gt, ht))
    T = max(abs(F[1] - H[0]), abs(H[1] - F[0]))
    if kappa != 0:
        T = min(T, max(abs(G[1] - H[0]), abs(H[1] - G[0])) / abs(kappa))
    width = H[1] - H[0]
    if T <= 0 or width <= 0:
        return EvalResult(0.0, 0.0, "bht", {"converged": True})

    def integrand(p):
        s = H[0] + width * p[:, 0]
        tau = np.maximum(p[:, 1], 1e-300)
        t = T * tau
        plus = _ev1(ft, s + t) * _ev1(gt, s + kappa * t)
        minus = _ev1(ft, s - t) * _ev1(gt, s - kappa * t)
        return width * _ev1(ht, s) * (plus - minus) / tau / 3.0

    vals, err, info = integrate_box(integrand, [0.0, 0.0], [1.0, 1.0], rel_tol=quad.rel_tol,
                                    abs_tol=quad.abs_tol, max_depth=quad.max_depth,
                                    max_evals=quad.max_evals, initial_splits=[4, 4])
    return EvalResult(vals[0], err, "bht", info)


# ---------------------------------------------------------------------------
# The full fiberwise integral
# ---------------------------------------------------------------------------

def _source_boxes(src, level):
    lo, hi = src.support_box(level)
    return np.asarray(lo, float), np.asarray(hi, float)


def _rho_range(e, boxes2):
    """rho with rho * e_i inside each second-coordinate interval; arrays over points."""
    lo = np.zeros(e.shape[0])
    hi = np.full(e.shape[0], np.inf)
    for i, (a, b) in enumerate(boxes2):
        ei = e[:, i]
        with np.errstate(divide="ignore", invalid="ignore"):
            r1, r2 = a / ei, b / ei
        l = np.where(ei > 0, r1, np.where(ei < 0, r2, np.where(a <= 0, -np.inf, np.inf)))
        u = np.where(ei > 0, r2, np.where(ei < 0, r1, np.where(b >= 0, np.inf, -np.inf)))
        lo = np.maximum(lo, l)
        hi = np.minimum(hi, u)
    return lo, hi


def _fiber_interval(a, b, x2):
    """Interval of u with u * x2 in [a, b]."""
    with np.errstate(divide="ignore"):
        p, q = a / x2, b / x2
    return np.minimum(p, q), np.maximum(p, q)


def _source_interval(src, a, b, x2):
    """Rescaled-fiber interval; sources may supply a tighter ``fiber_interval``."""
    hook = getattr(src, "fiber_interval", None)
    if hook is not None:
        return hook(x2)
    return _fiber_interval(a, b, x2)


def _fiber_values(src, u, x2):
    pts = np.stack([u * x2, x2], axis=1)
    return np.sign(x2) * src.evaluate(pts)


def _pv_extent(alo, ahi, blo, bhi, c):
    """Interval of d such that a + c d can meet [blo, bhi] for a in [alo, ahi]."""
    with np.errstate(divide="ignore", invalid="ignore"):
        p, q = (blo - ahi) / c, (bhi - alo) / c
    return np.minimum(p, q), np.maximum(p, q)


def _fiber_integrand(f, g, h, boxes):
    (fl, fh), (gl, gh), (hl, hh) = boxes

    def integrand(pts, th_lo, th_hi):
        n = pts.shape[0]
        theta = th_lo + (th_hi - th_lo) * pts[:, 0]
        e, _ = plane_frame(theta)
        rlo, rhi = _rho_range(e, [(fl[1], fh[1]), (gl[1], gh[1]), (hl[1], hh[1])])
        live = rhi > rlo
        rlo = np.where(live, rlo, 0.0)
        rhi = np.where(live, rhi, 0.0)
        rho = rlo + (rhi - rlo) * pts[:, 1]
        x2, y2, z2 = rho * e[:, 0], rho * e[:, 1], rho * e[:, 2]
        x2 = np.where(live & (x2 != 0), x2, 1.0)
        y2 = np.where(live & (y2 != 0), y2, 1.0)
        z2 = np.where(live & (z2 != 0), z2, 1.0)
        U = _source_interval(f, fl[0], fh[0], x2)
        V = _source_interval(g, gl[0], gh[0], y2)
        W = _source_interval(h, hl[0], hh[0], z2)
        # coefficients of d in the two other variables for each anchor
        r_yz, r_xz = y2 / z2, x2 / z2
        one = np.ones(n)
        anchors = [
            # w = -(x2 u + y2 v) / z2 fixes the third variable
            (U, [(V, -one), (W, r_yz)]),
            (V, [(U, one), (W, -r_xz)]),
            (W, [(U, -r_yz), (V, r_xz)]),
        ]
        best_area = np.full(n, np.inf)
        choice = np.zeros(n, dtype=int)
        dmax_all = []
        for k, (A, others) in enumerate(anchors):
            lo_d, hi_d = -np.inf * one, np.inf * one
            for B, c in others:
                a, b = _pv_extent(A[0], A[1], B[0], B[1], c)
                lo_d, hi_d = np.maximum(lo_d, a), np.minimum(hi_d, b)
            dmax = np.where(hi_d >= lo_d, np.maximum(np.abs(lo_d), np.abs(hi_d)), 0.0)
            area = (A[1] - A[0]) * dmax
            better = area < best_area
            choice = np.where(better, k, choice)
            best_area = np.where(better, area, best_area)
            dmax_all.append(dmax)
        dmax = np.choose(choice, dmax_all)
        alo = np.choose(choice, [U[0], V[0], W[0]])
        ahi = np.choose(choice, [U[1], V[1], W[1]])
        width = ahi - alo
        s = alo + width * pts[:, 2]
        tau = np.maximum(pts[:, 3], 1e-300)
        d = dmax * tau

        def triple(sign):
            dd = sign * d
            # (u, v, w) from the anchor and d
            u = np.choose(choice, [s, s + dd, s - r_yz * dd])
            v = np.choose(choice, [s - dd, s, s + r_xz * dd])
            w = np.choose(choice, [s + r_yz * dd, s - r_xz * dd, s])
            return (_fiber_values(f, u, x2) * _fiber_values(g, v, y2) * _fiber_values(h, w, z2))

        inner = width * (triple(1.0) - triple(-1.0)) / tau
        # Lambda = (1/3) int dx2 dy2 sgn(z2) int f~ g~ h~ / (u - v)
        weight = np.sign(z2) * rho * (th_hi - th_lo) * (rhi - rlo) / (3.0 * SQRT3)
        out = np.where(live & (dmax > 0) & (width > 0), weight * inner, 0.0)
        return out

    return integrand


def _arcs(margin):
    sing = singular_angles()
    ends = np.concatenate([sing, [sing[0] + 2 * math.pi]])
    return [(ends[i] + margin, ends[i + 1] - margin) for i in range(6)]


def lambda_fiberwise(f, g, h, quad: QuadratureSpec, *, certificate_norms=None) -> EvalResult:
    """Fiberwise route.  ``f, g, h`` need ``evaluate`` and ``support_box``;
    an optional ``fiber_interval(x2)`` gives the support of the rescaled fibers.

    ``certificate_norms`` optionally supplies the L^p norms used to bound the
    excised arcs; by default they are computed for SchwartzMix inputs.
    """
    level = quad.tail_level
    boxes = [_source_boxes(src, level) for src in (f, g, h)]
    margin = quad.singular_angle_margin
    total, err, cells, evals = [], 0.0, 0, 0
    converged = True
    q_arc = quad.with_(abs_tol=quad.abs_tol / 6.0)
    for th_lo, th_hi in _arcs(margin):
        base = _fiber_integrand(f, g, h, boxes)

        def integrand(p, base=base, th_lo=th_lo, th_hi=th_hi):
            return base(p, th_lo, th_hi)

        vals, e_arc, info = integrate_box(integrand, [0.0] * 4, [1.0] * 4, rel_tol=q_arc.rel_tol,
                                          abs_tol=q_arc.abs_tol, max_depth=q_arc.max_depth,
                                          max_evals=q_arc.max_evals // 6, initial_splits=[2, 2, 2, 2])
        total.append(vals[0])
        err += e_arc
        cells += info["cells"]
        evals += info["evals"]
        converged &= info["converged"]
    value = compensated_sum(total)
    excised = _excised_bound(f, g, h, margin, quad, certificate_norms)
    diag = {"cells": cells, "evals": evals, "converged": converged, "excised_bound": excised,
            "arcs": [complex(v) for v in total]}
    return EvalResult(value, err + excised, "fiberwise", diag)


# ---------------------------------------------------------------------------
# Angular certificate
# ---------------------------------------------------------------------------

def _frame_near(end, delta):
    """e(end + delta) expanded around ``end``; a component vanishing at ``end``
    stays proportional to sin(delta), free of cancellation."""
    e0, _ = plane_frame(end)
    e1, _ = plane_frame(end + math.pi / 2)
    e0 = np.where(np.abs(e0) < 1e-12, 0.0, e0)
    return np.cos(delta)[:, None] * e0[None, :] + np.sin(delta)[:, None] * e1[None, :]


def angular_constant(alphas, quad: QuadratureSpec | None = None, *, arcs=None) -> float:
    """int |e1|^{-a1} |e2|^{-a2} |e3|^{-a3} dtheta over the circle (or given arcs).

    Returns inf when some exponent is >= 1.  Each arc is split at its
    midpoint and mapped with theta = end +- half x^m, m = 1/(1 - a_max),
    which removes the endpoint singularities.
    """
    alphas = np.asarray([float(a) for a in alphas])
    if alphas.max() >= 1.0:
        return math.inf
    quad = quad or QuadratureSpec(rel_tol=1e-10, abs_tol=1e-14)
    m = 1.0 / (1.0 - alphas.max()) if alphas.max() > 0 else 1.0
    arcs = arcs if arcs is not None else _arcs(0.0)
    pieces = []
    for a, b in arcs:
        half = 0.5 * (b - a)
        for end, sgn in ((a, 1.0), (b, -1.0)):

            def fn(x, end=end, sgn=sgn):
                xx = x[:, 0]
                e = _frame_near(end, sgn * half * xx ** m)
                dens = np.prod(np.abs(e) ** (-alphas[None, :]), axis=1)
                return dens * half * m * xx ** (m - 1.0)

            vals, _, _ = integrate_box(fn, [0.0], [1.0], rel_tol=quad.rel_tol, abs_tol=quad.abs_tol,
                                       max_depth=quad.max_depth, initial_splits=[8])
            pieces.append(vals[0].real)
    return math.fsum(pieces)


def _excised_arcs(margin):
    return [((t - margin), (t + margin)) for t in singular_angles()]


def _excised_bound(f, g, h, margin, quad, norms):
    """Holder-type bound of the excised arcs, BHT constant normalised to 1.

    Around a zero of e_i the vanishing component gets exponent 1/10 and the
    other two 9/20, which keeps the arc integral of order margin^{0.8}.
    """
    if margin == 0:
        return 0.0
    total = 0.0
    sing = singular_angles()
    e, _ = plane_frame(sing)
    for k, th in enumerate(sing):
        i = int(np.argmin(np.abs(e[k])))
        pw = [20.0 / 9.0] * 3
        pw[i] = 10.0
        alphas = [2.0 / p for p in pw]
        A = angular_constant(alphas, arcs=[(th - margin, th), (th, th + margin)])
        if norms is None:
            if not all(isinstance(m, SchwartzMix) for m in (f, g, h)):
                return math.nan
            nf = lp_norm(f, pw[0], quad)
            ng = lp_norm(g, pw[1], quad)
            nh = lp_norm(h, pw[2], quad)
        else:
            nf, ng, nh = norms(pw)
        total += A * nf * ng * nh / SQRT3
    return total


@dataclass
class Certificate:
    exponents: ExponentTriple
    angular: float
    norms: tuple
    bound: float
    finite: bool
    fiber_norm_check: float | None = None

    def to_record(self) -> dict:
        return {
            "exponents": [self.exponents.p, self.exponents.q, self.exponents.r],
            "mixed": self.exponents.mixed,
            "angular": self.angular,
            "norms": list(self.norms),
            "bound": self.bound,
            "finite": self.finite,
            "fiber_norm_check": self.fiber_norm_check,
        }


def hoelder_certificate(f, g, h, exponents: ExponentTriple, quad: QuadratureSpec) -> Certificate:
    """Angular constant times the norm product, with the BHT constant set to 1.

    For plain exponents the norms are ||f||_p etc.; for mixed exponents
    they are the iterated L^{p2}(L^{p1}) norms.  A divergent angular
    integral is reported through ``finite = False``.
    """
    from .schwartz import mixed_norm

    alphas = exponents.angular_exponents()
    A = angular_constant(alphas)
    if exponents.mixed is None:
        norms = (lp_norm(f, exponents.p, quad), lp_norm(g, exponents.q, quad), lp_norm(h, exponents.r, quad))
        check = fiber_outer_norm(f, exponents.p, quad)
        check = abs(check - norms[0]) / max(norms[0], 1e-300)
    else:
        (p1, p2), (q1, q2), (r1, r2) = exponents.mixed
        norms = (mixed_norm(f, p1, p2, quad), mixed_norm(g, q1, q2, quad), mixed_norm(h, r1, r2, quad))
        check = None
    finite = math.isfinite(A)
    bound = A * norms[0] * norms[1] * norms[2] / SQRT3 if finite else math.inf
    return Certificate(exponents, A, norms, bound, finite, check)


def fiber_outer_norm(mix: SchwartzMix, p: float, quad: QuadratureSpec) -> float:
    """||F||_p with F(x2) = ||mix(., x2)||_p; equals ||mix||_p by Fubini."""
    from .schwartz import mixed_norm

    return mixed_norm(mix, p, p, quad)


def fiber_norm_scaling(mix: SchwartzMix, x2: float, p: float, quad: QuadratureSpec) -> tuple[float, float]:
    """(||f~||_p, |x2|^{-1/p} ||f(., x2)||_p) for a single fiber."""
    from .schwartz import fiber

    if x2 == 0:
        raise SingularPointError("fiber at x2 = 0")
    lhs = lp_norm(scaled_fiber(mix, x2), p, quad)
    rhs = abs(x2) ** (-1.0 / p) * lp_norm(fiber(mix, x2), p, quad)
    return lhs, rhs
