"""Calderon's first commutator through three independent routes.

    C(F, G)(x) = p.v. int F(y) (G(x) - G(y)) / (x - y)^2 dy

* ``commutator_direct``: the PV in t = y - x with the smooth difference
  quotient (G(x) - G(x+t)) / t folded into the numerator.
* ``commutator_kappa``: the pairing int_0^1 int int F(s+t) G'(s+kappa t) H(s)
  dt/t ds dkappa, which equals -int C(F, G) H.
* ``commutator_via_lambda``: the form evaluated on the planar functions

      f = -2^{1/p} rho_-(x2) F(x1/x2),  g = 2^{1/q} rho_+(y2) G'(y1/y2),
      h = -2^{1/r} rho_-(z2) H(z1/z2),

  rho_- and rho_+ being smooth approximations of the indicators of (-1, 0)
  and (0, 1).  With sharp indicators the fiber calculation gives
  Lambda = -(1/3) x (the kappa pairing); that constant is frozen below.
  The ramps bias Lambda at first order in their width, so the recovery can
  instead divide by the ratio measured on the reference inputs at the same
  width (``calibrated_constant``), which cancels the part of the bias the
  two triples share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fiberwise import lambda_fiberwise
from .quadrature import EvalResult, QuadratureSpec, integrate_box, pv_over_mu
from .schwartz import DerivativeMix, ExponentTriple, GaussianAtom, SchwartzMix, lp_norm

__all__ = [
    "CommutatorInputs",
    "commutator_direct",
    "commutator_pairing_direct",
    "commutator_kappa",
    "commutator_via_lambda",
    "SmoothRamp",
    "LAMBDA_CONSTANT",
    "reference_inputs",
    "AffineProfile",
    "calibrated_constant",
]

# Lambda(f, g, h) = LAMBDA_CONSTANT * commutator_kappa(F, G, H) for sharp indicators
LAMBDA_CONSTANT = -1.0 / 3.0

_SMALL_T = 1e-6


def _ev(m, x):
    x = np.asarray(x, dtype=float)
    return m.evaluate(x[..., None])


@dataclass
class CommutatorInputs:
    F: SchwartzMix
    G: SchwartzMix
    H: SchwartzMix

    def __post_init__(self):
        for m in (self.F, self.G, self.H):
            if m.dim != 1:
                raise ValueError("commutator inputs are one-dimensional mixes")

    @property
    def dG(self) -> DerivativeMix:
        return DerivativeMix(self.G)


@dataclass(frozen=True)
class AffineProfile:
    """G(y) = slope * y + intercept; only meaningful as the G of commutator_direct."""

    slope: float = 1.0
    intercept: float = 0.0

    def evaluate(self, x):
        return self.slope * np.asarray(x, dtype=float)[..., 0] + self.intercept

    def derivative(self):
        return AffineProfile(0.0, self.slope)


def _derivative(G):
    return G.derivative() if hasattr(G, "derivative") else DerivativeMix(G)


def reference_inputs() -> CommutatorInputs:
    """Standard Gaussians with small offsets; used to measure the constant."""
    def one(c, b=0.0, k=1.0):
        return SchwartzMix(1, [GaussianAtom(1.0, [c], [b], [[k]])])
    return CommutatorInputs(one(0.0), one(0.5), one(-0.3))


def _diff_quotient(G, x, t):
    """(G(x) - G(x+t)) / t, switching to -G'(x + t/2) for tiny |t|."""
    small = np.abs(t) < _SMALL_T
    ts = np.where(small, 1.0, t)
    q = (_ev(G, x) - _ev(G, x + ts)) / ts
    if np.any(small):
        d = -_derivative(G).evaluate((x + 0.5 * t)[..., None])
        q = np.where(small, d, q)
    return q


def _radius(F, x, level):
    lo, hi = F.support_interval(level)
    return max(abs(hi - x), abs(x - lo), 1.0)


def commutator_direct(F: SchwartzMix, G: SchwartzMix, x: float, quad: QuadratureSpec) -> complex:
    """C(F, G)(x) as p.v. int phi(t) dt / t with phi(t) = F(x+t) (G(x) - G(x+t)) / t."""
    x = float(x)

    def phi(t):
        return _ev(F, x + t) * _diff_quotient(G, np.full_like(t, x), t)

    res = pv_over_mu(phi, quad, radius=_radius(F, x, quad.tail_level))
    return res.value


def commutator_pairing_direct(F: SchwartzMix, G: SchwartzMix, H: SchwartzMix,
                              quad: QuadratureSpec) -> EvalResult:
    """-int C(F, G)(x) H(x) dx from the difference-quotient form (no G')."""
    level = quad.tail_level
    a, b = H.support_interval(level)
    fa, fb = F.support_interval(level)
    T = max(abs(fb - a), abs(b - fa), 1.0)
    width = b - a

    def integrand(p):
        x = a + width * p[:, 0]
        tau = np.maximum(p[:, 1], 1e-300)
        t = T * tau
        plus = _ev(F, x + t) * _diff_quotient(G, x, t)
        minus = _ev(F, x - t) * _diff_quotient(G, x, -t)
        return -width * _ev(H, x) * (plus - minus) / tau

    vals, err, info = integrate_box(integrand, [0.0, 0.0], [1.0, 1.0], rel_tol=quad.rel_tol,
                                    abs_tol=quad.abs_tol, max_depth=quad.max_depth,
                                    max_evals=quad.max_evals, initial_splits=[4, 4])
    return EvalResult(vals[0], err, "commutator_direct", info)


def commutator_kappa(F: SchwartzMix, G: SchwartzMix, H: SchwartzMix, quad: QuadratureSpec) -> EvalResult:
    """int_0^1 int p.v. int F(s+t) G'(s+kappa t) dt/t H(s) ds dkappa."""
    dG = DerivativeMix(G)
    level = quad.tail_level
    a, b = H.support_interval(level)
    fa, fb = F.support_interval(level)
    T = max(abs(fb - a), abs(b - fa), 1.0)
    width = b - a

    def integrand(p):
        kappa = p[:, 0]
        s = a + width * p[:, 1]
        tau = np.maximum(p[:, 2], 1e-300)
        t = T * tau
        plus = _ev(F, s + t) * _ev(dG, s + kappa * t)
        minus = _ev(F, s - t) * _ev(dG, s - kappa * t)
        return width * _ev(H, s) * (plus - minus) / tau

    vals, err, info = integrate_box(integrand, [0.0, 0.0, 0.0], [1.0, 1.0, 1.0], rel_tol=quad.rel_tol,
                                    abs_tol=quad.abs_tol, max_depth=quad.max_depth,
                                    max_evals=quad.max_evals, initial_splits=[2, 4, 4])
    return EvalResult(vals[0], err, "commutator_kappa", info)


# ---------------------------------------------------------------------------
# Recovery through the planar form
# ---------------------------------------------------------------------------

def _smooth_step(t):
    """0 for t <= 0, 1 for t >= 1, C-infinity in between."""
    t = np.asarray(t, dtype=float)
    a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
    b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class SmoothRamp:
    """Smooth approximation of the indicator of (lo, hi) with ramps of width eta.

    The edge at ``inner`` (the end touching x2 = 0) ramps entirely inside the
    interval.  The other edge is never active in the lifted integrals, so its
    ramp is centred on the endpoint.
    """

    lo: float
    hi: float
    eta: float
    inner: str = "hi"

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if 2 * self.eta >= self.hi - self.lo:
            raise ValueError("eta too large: the ramps would overlap")
        if self.inner not in ("lo", "hi"):
            raise ValueError("inner must be 'lo' or 'hi'")

    @property
    def support(self) -> tuple[float, float]:
        h = 0.5 * self.eta
        return (self.lo, self.hi + h) if self.inner == "lo" else (self.lo - h, self.hi)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        e, h = self.eta, 0.5 * self.eta
        if self.inner == "lo":
            return _smooth_step((x - self.lo) / e) * _smooth_step((self.hi + h - x) / e)
        return _smooth_step((x - self.lo + h) / e) * _smooth_step((self.hi - x) / e)

    def power_moment(self, p: float) -> float:
        """int ramp(x)^p |x| dx."""
        a, b = self.support
        vals, _, _ = integrate_box(lambda y: self(y[:, 0]) ** p * np.abs(y[:, 0]), [a], [b],
                                   rel_tol=1e-10, abs_tol=1e-14, initial_splits=[16])
        return float(vals[0].real)


class PlanarLift:
    """(x1, x2) -> sign * 2^{1/p} ramp(x2) M(x1/x2) for a 1-D mix (or derivative) M."""

    def __init__(self, profile, ramp: SmoothRamp, sign: float, p: float, level: float):
        self.profile = profile
        self.ramp = ramp
        self.factor = sign * 2.0 ** (1.0 / p)
        self.p = p
        self._interval = profile.support_interval(level)

    def evaluate(self, pts):
        pts = np.asarray(pts, dtype=float)
        x1, x2 = pts[..., 0], pts[..., 1]
        w = self.ramp(x2)
        safe = np.where(w > 0, x2, 1.0)
        return np.where(w > 0, self.factor * w * _ev(self.profile, x1 / safe), 0.0)

    def support_box(self, level: float = 0.0):
        a, b = self._interval
        lo2, hi2 = self.ramp.support
        r = max(abs(a), abs(b)) * max(abs(lo2), abs(hi2))
        return np.array([-r, lo2]), np.array([r, hi2])

    def fiber_interval(self, x2):
        a, b = self._interval
        return np.full_like(x2, a), np.full_like(x2, b)

    def lp_norm(self, p: float, quad: QuadratureSpec) -> float:
        """|factor| (int ramp^p |x2| dx2)^{1/p} ||M||_p, by the substitution x1 = u x2."""
        prof = lp_norm(self.profile, p, quad) if isinstance(self.profile, SchwartzMix) else _profile_norm(self.profile, p, quad)
        return abs(self.factor) * self.ramp.power_moment(p) ** (1.0 / p) * prof


def _profile_norm(profile, p, quad):
    a, b = profile.support_interval(quad.tail_level ** (1.0 / p))
    vals, _, _ = integrate_box(lambda x: np.abs(_ev(profile, x[:, 0])) ** p, [a], [b],
                               rel_tol=min(quad.rel_tol, 1e-8), abs_tol=1e-14, initial_splits=[8])
    return float(vals[0].real) ** (1.0 / p)


def lifted_functions(inputs: CommutatorInputs, exponents: ExponentTriple, eta: float, level: float):
    neg = SmoothRamp(-1.0, 0.0, eta, inner="hi")
    pos = SmoothRamp(0.0, 1.0, eta, inner="lo")
    f = PlanarLift(inputs.F, neg, -1.0, exponents.p, level)
    g = PlanarLift(inputs.dG, pos, 1.0, exponents.q, level)
    h = PlanarLift(inputs.H, neg, -1.0, exponents.r, level)
    return f, g, h


def commutator_via_lambda(F: SchwartzMix, G: SchwartzMix, H: SchwartzMix, exponents: ExponentTriple | None,
                          eta: float, quad: QuadratureSpec, *, constant: float | None = None) -> EvalResult:
    """Recover the kappa pairing from the fiberwise form on the lifted functions.

    ``constant`` is the ratio Lambda / pairing to divide by; the sharp-indicator
    value LAMBDA_CONSTANT is used when it is not given.
    """
    if not 0 < eta < 0.5:
        raise ValueError("eta must lie in (0, 1/2): larger ramps reach x2 = 0")
    exponents = exponents or ExponentTriple(3.0, 3.0, 3.0)
    inputs = CommutatorInputs(F, G, H)
    f, g, h = lifted_functions(inputs, exponents, eta, quad.tail_level)

    def norms(pw):
        return f.lp_norm(pw[0], quad), g.lp_norm(pw[1], quad), h.lp_norm(pw[2], quad)

    lam = lambda_fiberwise(f, g, h, quad, certificate_norms=norms)
    const = LAMBDA_CONSTANT if constant is None else float(constant)
    out = lam.scaled(1.0 / const, route="commutator_lambda")
    out.diagnostics["lambda_value"] = complex(lam.value)
    out.diagnostics["eta"] = eta
    out.diagnostics["constant"] = const
    return out


def measure_lambda_constant(quad: QuadratureSpec, eta: float) -> float:
    """Lambda / (kappa pairing) on the reference inputs at ramp width eta."""
    ref = reference_inputs()
    lam = commutator_via_lambda(ref.F, ref.G, ref.H, None, eta, quad).diagnostics["lambda_value"]
    kap = commutator_kappa(ref.F, ref.G, ref.H, quad).value
    return float((lam / kap).real)


def calibrated_constant(quad: QuadratureSpec, eta: float) -> float:
    """The constant measured on the reference inputs at ramp width ``eta``."""
    return measure_lambda_constant(quad, eta)
