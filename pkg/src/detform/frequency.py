"""Frequency-side evaluation.

The form is (1/3) p.v. int fh(xi) gh(eta) hh(zeta) det(1 1 1; xi eta zeta)^{-1}
over (R^2)^3.  The determinant is blind to a common translation rho of the
three frequencies, so the rho integral is done first:

    Psi(xi, eta, zeta) = int_{R^2} fh(xi+rho) gh(eta+rho) hh(zeta+rho) drho,

for (xi, eta, zeta) on the plane xi+eta+zeta = 0.  The translation direction
carries the coordinate zeta_tilde = sqrt3 rho, contributing a factor 3, so
the 6-fold integral is the same plane PV integral as on the space side with
prefactor 1/sqrt3 instead of 1/(3 sqrt3).  Closed-form spectra get Psi
exactly; generic spectra use a tensor Gauss-Legendre rule on the overlap of
their envelope boxes.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import SQRT3, plane_pv_integral, plane_radius_centered
from .quadrature import EvalResult, QuadratureSpec
from .schwartz import SchwartzMix, SpectrumFunction

__all__ = ["lambda_frequency", "FREQUENCY_PREFACTOR", "translation_overlap"]

# The distributional transform of p.v. 1/det(x, y) on R^4 is -p.v. 1/det
# under the e^{-2 pi i x.xi} convention, so the literal frequency integral
# carries the opposite sign of the space-side form.
FREQUENCY_SIGN = -1.0
FREQUENCY_PREFACTOR = FREQUENCY_SIGN / SQRT3


def _as_spectrum(s) -> SpectrumFunction:
    if isinstance(s, SpectrumFunction):
        return s
    if isinstance(s, SchwartzMix):
        return SpectrumFunction.from_mix(s)
    raise TypeError("expected a SpectrumFunction or a SchwartzMix")


def translation_overlap(fm: SchwartzMix, gm: SchwartzMix, hm: SchwartzMix, xi, eta, zeta) -> np.ndarray:
    """Closed form of int fm(xi+r) gm(eta+r) hm(zeta+r) dr for Gaussian mixtures."""
    n = xi.shape[0]
    out = np.zeros(n, dtype=complex)
    pts = (xi, eta, zeta)
    for aj in fm.atoms:
        for ak in gm.atoms:
            for al in hm.atoms:
                atoms = (aj, ak, al)
                Q = aj.shape + ak.shape + al.shape
                Qi = np.linalg.inv(Q)
                m = np.zeros((n, 2), dtype=complex)
                const = np.zeros(n, dtype=complex)
                amp = aj.amplitude * ak.amplitude * al.amplitude / math.sqrt(np.linalg.det(Q))
                for a, p in zip(atoms, pts):
                    d = a.center - p
                    Sd = d @ a.shape
                    m += Sd + 1j * a.modulation
                    const += -math.pi * np.einsum("ni,ni->n", d, Sd) + 2j * math.pi * (p @ a.modulation)
                quadform = np.einsum("ni,ij,nj->n", m, Qi, m)
                out += amp * np.exp(const + math.pi * quadform)
    return out


def _gauss_legendre(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _generic_overlap(fs, gs, hs, xi, eta, zeta, order):
    """Tensor Gauss-Legendre rule on the overlap of the three shifted boxes."""
    lo = np.maximum.reduce([fs.box[0] - xi, gs.box[0] - eta, hs.box[0] - zeta])
    hi = np.minimum.reduce([fs.box[1] - xi, gs.box[1] - eta, hs.box[1] - zeta])
    live = np.all(hi > lo, axis=1)
    out = np.zeros(len(xi), dtype=complex)
    if not np.any(live):
        return out
    lo, hi = lo[live], hi[live]
    x, w = _gauss_legendre(order)
    X, Y = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w).ravel()
    ref = np.stack([X.ravel(), Y.ravel()], axis=1)
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    rho = mid[:, None, :] + half[:, None, :] * ref[None, :, :]
    vals = (fs(xi[live][:, None, :] + rho) * gs(eta[live][:, None, :] + rho)
            * hs(zeta[live][:, None, :] + rho))
    out[live] = (vals @ W) * np.prod(half, axis=1)
    return out


def lambda_frequency(fs, gs, hs, quad: QuadratureSpec) -> EvalResult:
    """Evaluate the frequency-side form from the three spectra."""
    fs, gs, hs = (_as_spectrum(s) for s in (fs, gs, hs))
    closed = all(s.is_closed_form for s in (fs, gs, hs))
    if closed:
        boxes = [s.mix.support_box(quad.tail_level) for s in (fs, gs, hs)]
    else:
        boxes = [s.box for s in (fs, gs, hs)]
    first = [(b[0][0], b[1][0]) for b in boxes]
    second = [(b[0][1], b[1][1]) for b in boxes]
    lam_max = plane_radius_centered(first)
    rho_max = plane_radius_centered(second)
    q = quad.with_(abs_tol=quad.abs_tol / abs(FREQUENCY_PREFACTOR))

    if closed:
        def phi(x, y, z):
            return translation_overlap(fs.mix, gs.mix, hs.mix, x, y, z)
    else:
        hi_order = quad.inner_order
        lo_order = max(4, (2 * hi_order) // 3)

        def phi(x, y, z):
            a = _generic_overlap(fs, gs, hs, x, y, z, hi_order)
            b = _generic_overlap(fs, gs, hs, x, y, z, lo_order)
            return np.stack([a, b], axis=1)

    res = plane_pv_integral(phi, rho_max, lam_max, q, route="frequency")
    out = res.scaled(FREQUENCY_PREFACTOR, route="frequency")
    comps = out.diagnostics.pop("components")
    out.diagnostics.update({"lam_max": lam_max, "rho_max": rho_max, "closed_form": closed})
    if not closed:
        inner_err = abs(comps[0] - comps[1]) * abs(FREQUENCY_PREFACTOR)
        out.diagnostics["inner_rule_error"] = float(inner_err)
        out.error_estimate += float(inner_err)
    return out
