"""Dyadic bump counterexample at the endpoint p <= 2.

f is a bump of radius delta at x0; g and h are sums of bumps of radius
2^n delta centred at 2^n y0 and -x0 - 2^n y0, weighted so that the L^q and
L^r norms stay bounded while the form grows like sum 2^{(2/p-1)n} n^{2/p-2}.

With x = x0 + delta u and y = 2^n (y0 + delta v) the n-th term becomes

    term_n = (delta^4 / 3) J_n 2^{(2/p-1)n} n^{2/p-2},
    J_n = int_{B2 x B2} psi(|u|) psi(|v|) psi(|v + 2^{-n} u|) / det(x0 + delta u, y0 + delta v) du dv,

so every term is a four-dimensional integral over the same fixed cell and
no Monte Carlo is needed at any n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .quadrature import QuadratureSpec, integrate_box

__all__ = [
    "BumpProfile",
    "CounterexampleSpec",
    "Bump",
    "BumpSum",
    "build_counterexample",
    "counterexample_norms",
    "lower_bound_series",
    "lambda_counterexample_terms",
    "TermRecord",
    "phi_norm",
    "phi_norm_monte_carlo",
    "cumulative_ratios",
]

X0 = np.array([1.0 / math.sqrt(2.0), 1.0 / math.sqrt(6.0)])
Y0 = np.array([-1.0 / math.sqrt(2.0), 1.0 / math.sqrt(6.0)])
Z0 = np.array([0.0, -2.0 / math.sqrt(6.0)])


def _s(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


class BumpProfile:
    """psi(r) = s(2-r) / (s(2-r) + s(r-1)), s(t) = exp(-1/t) for t > 0."""

    inner = 1.0
    outer = 2.0

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        a, b = _s(2.0 - r), _s(r - 1.0)
        return a / (a + b)

    def bump(self, x):
        """phi(x) = psi(|x|) for points of shape (..., 2)."""
        return self(np.linalg.norm(np.asarray(x, dtype=float), axis=-1))


PSI = BumpProfile()


@dataclass(frozen=True)
class CounterexampleSpec:
    p: float = 2.0
    q: float = 4.0
    r: float = 4.0
    N: int = 16
    delta: float = 0.01
    n_min: int = 10

    def __post_init__(self):
        if abs(1 / self.p + 1 / self.q + 1 / self.r - 1) > 1e-12:
            raise ValueError("exponents must satisfy 1/p + 1/q + 1/r = 1")
        if not (1 <= self.p <= 2):
            raise ValueError("the construction covers 1 <= p <= 2")
        if not (math.isfinite(self.q) and math.isfinite(self.r)):
            raise ValueError("q and r must be finite")
        if self.N < self.n_min:
            raise ValueError(f"N must be at least {self.n_min}")
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    @property
    def frame(self):
        return X0, Y0, Z0

    def weight_g(self, n: int) -> float:
        return 2.0 ** (-2.0 * n / self.q) * n ** (-2.0 / self.q)

    def weight_h(self, n: int) -> float:
        return 2.0 ** (-2.0 * n / self.r) * n ** (-2.0 / self.r)


@dataclass(frozen=True)
class Bump:
    """weight * psi(|x - center| / radius)."""

    weight: float
    radius: float
    center: np.ndarray

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return self.weight * PSI((np.linalg.norm(x - self.center, axis=-1)) / self.radius)

    def support_box(self, level: float = 0.0):
        r = PSI.outer * self.radius
        return self.center - r, self.center + r


@dataclass
class BumpSum:
    bumps: list = field(default_factory=list)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for b in self.bumps:
            out = out + b.evaluate(x)
        return out

    __call__ = evaluate

    def support_box(self, level: float = 0.0):
        boxes = [b.support_box() for b in self.bumps]
        return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)


def _check_disjoint(bumps: list, name: str):
    for i, a in enumerate(bumps):
        for b in bumps[i + 1:]:
            gap = np.linalg.norm(a.center - b.center)
            if gap <= PSI.outer * (a.radius + b.radius):
                raise ValueError(f"{name}: bump supports overlap; delta is too large")


def build_counterexample(spec: CounterexampleSpec):
    """(f, g, h) as BumpSum objects with certified disjoint supports."""
    d = spec.delta
    f = BumpSum([Bump(1.0, d, X0.copy())])
    g = BumpSum([Bump(spec.weight_g(n), 2.0 ** n * d, 2.0 ** n * Y0) for n in range(spec.n_min, spec.N + 1)])
    h = BumpSum([Bump(spec.weight_h(n), 2.0 ** n * d, -X0 - 2.0 ** n * Y0) for n in range(spec.n_min, spec.N + 1)])
    _check_disjoint(g.bumps, "g")
    _check_disjoint(h.bumps, "h")
    return f, g, h


def phi_norm(q: float, quad: QuadratureSpec | None = None) -> float:
    """||phi||_q^q = 2 pi int_0^2 psi(r)^q r dr."""
    quad = quad or QuadratureSpec(rel_tol=1e-12, abs_tol=1e-15)
    vals, _, _ = integrate_box(lambda x: PSI(x[:, 0]) ** q * x[:, 0], [0.0], [PSI.outer],
                               rel_tol=quad.rel_tol, abs_tol=quad.abs_tol, max_depth=quad.max_depth,
                               initial_splits=[8])
    return 2.0 * math.pi * vals[0].real


def phi_norm_monte_carlo(q: float, samples: int = 400_000, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo estimate of ||phi||_q^q on [-2, 2]^2 and its standard error."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-PSI.outer, PSI.outer, size=(samples, 2))
    v = PSI.bump(x) ** q
    area = (2 * PSI.outer) ** 2
    return float(area * v.mean()), float(area * v.std(ddof=1) / math.sqrt(samples))


def _bump_power_integral(b: Bump, q: float, quad: QuadratureSpec) -> float:
    """int |b|^q over its support box by 2-D cubature."""
    lo, hi = b.support_box()
    vals, _, _ = integrate_box(lambda x: np.abs(b.evaluate(x)) ** q, lo, hi, rel_tol=quad.rel_tol,
                               abs_tol=quad.abs_tol * abs(b.weight) ** q * b.radius ** 2, max_depth=quad.max_depth,
                               initial_splits=[4, 4])
    return vals[0].real


@dataclass
class CounterexampleNorms:
    f: float
    g: float
    h: float
    g_series: float
    h_series: float
    f_closed: float

    def product(self) -> float:
        return self.f * self.g * self.h


def counterexample_norms(spec: CounterexampleSpec, quad: QuadratureSpec) -> CounterexampleNorms:
    """Norms by per-bump quadrature, next to the closed-form series values."""
    f, g, h = build_counterexample(spec)
    q2 = quad.with_(rel_tol=min(quad.rel_tol, 1e-8), abs_tol=1e-14)
    nf = _bump_power_integral(f.bumps[0], spec.p, q2) ** (1.0 / spec.p)
    ng = math.fsum(_bump_power_integral(b, spec.q, q2) for b in g.bumps) ** (1.0 / spec.q)
    nh = math.fsum(_bump_power_integral(b, spec.r, q2) for b in h.bumps) ** (1.0 / spec.r)
    d2 = spec.delta ** 2
    tail = math.fsum(n ** -2.0 for n in range(spec.n_min, spec.N + 1))
    g_series = (d2 * phi_norm(spec.q) * tail) ** (1.0 / spec.q)
    h_series = (d2 * phi_norm(spec.r) * tail) ** (1.0 / spec.r)
    f_closed = (d2 * phi_norm(spec.p)) ** (1.0 / spec.p)
    return CounterexampleNorms(nf, ng, nh, g_series, h_series, f_closed)


def lower_bound_series(p: float, N: int, n_min: int = 10) -> float:
    """sum_{n=n_min}^N 2^{(2/p-1)n} n^{2/p-2}."""
    if N < n_min:
        raise ValueError(f"N must be at least {n_min}")
    a = 2.0 / p
    return math.fsum(2.0 ** ((a - 1.0) * n) * float(n) ** (a - 2.0) for n in range(n_min, N + 1))


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

def _cell_det(u, v, delta):
    x = X0 + delta * u
    y = Y0 + delta * v
    return x[:, 0] * y[:, 1] - x[:, 1] * y[:, 0]


def _polar(p):
    """(r1, a1, r2, a2) -> u, v and the Jacobian r1 r2."""
    r1, a1, r2, a2 = p[:, 0], p[:, 1], p[:, 2], p[:, 3]
    u = np.stack([r1 * np.cos(a1), r1 * np.sin(a1)], axis=1)
    v = np.stack([r2 * np.cos(a2), r2 * np.sin(a2)], axis=1)
    return u, v, r1 * r2 * PSI(r1) * PSI(r2)


def _j_integrand(eps_list, delta):
    """Integrand of J in polar coordinates, for several eps = 2^{-n} at once."""
    def fn(p):
        u, v, w = _polar(p)
        d = _cell_det(u, v, delta)
        if np.any(d <= 0):
            raise ArithmeticError("determinant is not positive on the support cell")
        base = w / d
        return np.stack([base * PSI.bump(v + e * u) for e in eps_list], axis=1)
    return fn


def _j_difference_integrand(eps, eps_ref, delta):
    """psi(u) psi(v) [psi(|v + eps u|) - psi(|v + eps_ref u|)] / det, polar form."""
    def fn(p):
        u, v, w = _polar(p)
        return w * (PSI.bump(v + eps * u) - PSI.bump(v + eps_ref * u)) / _cell_det(u, v, delta)
    return fn


# radius split at the plateau edge, angles in quarters
_CELL_LO = [0.0, 0.0, 0.0, 0.0]
_CELL_HI = [PSI.outer, 2 * math.pi, PSI.outer, 2 * math.pi]
_CELL_SPLITS = [2, 4, 2, 4]


@dataclass
class TermRecord:
    n: int
    term: float
    error: float
    lower_bound: float
    cell_integral: float
    excess_over_reference: float
    excess_error: float
    det_range: tuple

    @property
    def meets_lower_bound(self) -> bool:
        """term_n >= c n-scaling, with c taken from the reference term."""
        return self.excess_over_reference >= -3.0 * self.excess_error

    def to_record(self) -> dict:
        return {"n": self.n, "term": self.term, "error": self.error, "lower_bound": self.lower_bound,
                "J": self.cell_integral, "J_minus_Jref": self.excess_over_reference,
                "J_minus_Jref_error": self.excess_error, "det_min": self.det_range[0],
                "det_max": self.det_range[1], "meets_lower_bound": self.meets_lower_bound}


def _det_range(n, delta, samples=20_000, seed=0):
    """Sampled range of det(1 1 1; x y z) on the support cell of term n."""
    rng = np.random.default_rng(seed + n)
    r = PSI.outer * np.sqrt(rng.uniform(0, 1, size=(samples, 2)))
    a = rng.uniform(0, 2 * math.pi, size=(samples, 2))
    u = np.stack([r[:, 0] * np.cos(a[:, 0]), r[:, 0] * np.sin(a[:, 0])], axis=1)
    v = np.stack([r[:, 1] * np.cos(a[:, 1]), r[:, 1] * np.sin(a[:, 1])], axis=1)
    d = 3.0 * 2.0 ** n * _cell_det(u, v, delta)
    lo, hi = float(d.min()), float(d.max())
    if not (0 < lo and hi <= 2.0 * 2.0 ** n):
        raise ArithmeticError(f"determinant bound violated for n={n}: [{lo}, {hi}]")
    return lo, hi


def lambda_counterexample_terms(spec: CounterexampleSpec, n_range, quad: QuadratureSpec) -> list[TermRecord]:
    """Terms of the form on f, g_n, h_n; the lower-bound constant comes from n = n_min."""
    n_range = list(n_range)
    if any(n < spec.n_min or n > spec.N for n in n_range):
        raise ValueError("n outside [n_min, N]")
    d = spec.delta
    eps = [2.0 ** -n for n in n_range]
    eps_ref = 2.0 ** -spec.n_min
    lo, hi = _CELL_LO, _CELL_HI
    vals, err, _ = integrate_box(_j_integrand([eps_ref] + eps, d), lo, hi, rel_tol=quad.rel_tol,
                                 abs_tol=quad.abs_tol, max_depth=quad.max_depth,
                                 max_evals=quad.max_evals, initial_splits=_CELL_SPLITS)
    J = vals.real
    a = 2.0 / spec.p
    scale_ref = 2.0 ** ((a - 1.0) * spec.n_min) * spec.n_min ** (a - 2.0)
    term_ref = d ** 4 / 3.0 * J[0] * scale_ref
    c = term_ref / scale_ref
    out = []
    for k, n in enumerate(n_range):
        scale = 2.0 ** ((a - 1.0) * n) * float(n) ** (a - 2.0)
        pref = d ** 4 / 3.0 * scale
        if n == spec.n_min:
            diff, diff_err = 0.0, 0.0
        else:
            dv, de, _ = integrate_box(_j_difference_integrand(eps[k], eps_ref, d), lo, hi,
                                      rel_tol=1e-3, abs_tol=1e-3 * quad.abs_tol,
                                      max_depth=quad.max_depth, max_evals=quad.max_evals,
                                      initial_splits=_CELL_SPLITS)
            diff, diff_err = float(dv[0].real), float(de)
        out.append(TermRecord(n, float(pref * J[k + 1]), float(pref * err), float(c * scale),
                              float(J[k + 1]), diff, diff_err, _det_range(n, d)))
    return out


def cumulative_ratios(spec: CounterexampleSpec, terms: list[TermRecord], quad: QuadratureSpec) -> list[float]:
    """Partial sums of the terms over the norm product of the truncation at each N."""
    by_n = {t.n: t.term for t in terms}
    out = []
    for N in sorted(by_n):
        sub = CounterexampleSpec(spec.p, spec.q, spec.r, N, spec.delta, spec.n_min)
        norms = counterexample_norms(sub, quad)
        partial = math.fsum(by_n[n] for n in range(spec.n_min, N + 1))
        out.append(partial / norms.product())
    return out
