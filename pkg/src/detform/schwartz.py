"""Gaussian wave-packet mixtures on R^1 and R^2.

An atom is ``a * exp(-pi (x-c)^T S (x-c)) * exp(2 pi i b.x)``.  The class is
closed under the Fourier transform (convention ``int f(x) e^{-2 pi i xi.x} dx``),
linear changes of variable, modulation and restriction to lines, so every
test function the evaluators see is known in closed form.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .quadrature import EvalResult, QuadratureSpec, adaptive_nd, integrate_box

__all__ = [
    "GaussianAtom",
    "SchwartzMix",
    "AtomBatch1D",
    "DerivativeMix",
    "SpectrumFunction",
    "ExponentTriple",
    "SingularPointError",
    "eval_mix",
    "fourier",
    "fiber",
    "scaled_fiber",
    "lp_norm",
    "sup_norm",
    "mixed_norm",
    "dilate",
    "modulate",
    "projective_spectrum",
]

TWO_PI = 2.0 * math.pi


class SingularPointError(ValueError):
    """Evaluation requested on the line sent to infinity by a projective map."""


def _as_matrix(S, d):
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.shape != (d, d):
        raise ValueError(f"shape matrix must be {d}x{d}")
    return S


@dataclass(frozen=True)
class GaussianAtom:
    amplitude: complex
    center: np.ndarray
    modulation: np.ndarray
    shape: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        d = c.size
        if d not in (1, 2):
            raise ValueError("atoms live in dimension 1 or 2")
        b = np.atleast_1d(np.asarray(self.modulation, dtype=float))
        if b.size != d:
            raise ValueError("modulation and center dimensions differ")
        S = _as_matrix(self.shape, d)
        if not np.allclose(S, S.T, rtol=0, atol=1e-12 * max(1.0, np.abs(S).max())):
            raise ValueError("shape matrix must be symmetric")
        S = 0.5 * (S + S.T)
        if np.linalg.eigvalsh(S).min() <= 0:
            raise ValueError("shape matrix must be positive definite")
        object.__setattr__(self, "amplitude", complex(self.amplitude))
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "modulation", b)
        object.__setattr__(self, "shape", S)

    @property
    def dim(self) -> int:
        return self.center.size

    @classmethod
    def standard(cls, dim: int = 2, amplitude: complex = 1.0, center=None, modulation=None, shape=None):
        z = np.zeros(dim)
        return cls(amplitude,
                   z if center is None else center,
                   z if modulation is None else modulation,
                   np.eye(dim) if shape is None else shape)

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError("point dimension does not match atom dimension")
        u = x - self.center
        quad = np.einsum("...i,ij,...j->...", u, self.shape, u)
        phase = x @ self.modulation
        return self.amplitude * np.exp(-math.pi * quad + 1j * TWO_PI * phase)

    def axis_halfwidth(self, level: float) -> np.ndarray:
        """Per-axis half-width outside which |atom| < level."""
        a = abs(self.amplitude)
        if a <= level:
            return np.zeros(self.dim)
        cov = np.linalg.inv(self.shape)
        return np.sqrt(math.log(a / level) * np.diag(cov) / math.pi)

    def to_json(self) -> dict:
        return {
            "amp": [self.amplitude.real, self.amplitude.imag],
            "center": self.center.tolist(),
            "modulation": self.modulation.tolist(),
            "shape": self.shape.tolist(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "GaussianAtom":
        amp = d["amp"]
        if isinstance(amp, (list, tuple)):
            amp = complex(amp[0], amp[1])
        return cls(amp, d["center"], d["modulation"], d["shape"])


class SchwartzMix:
    """Finite sum of Gaussian atoms sharing one dimension.

    An empty atom list is the zero function.
    """

    def __init__(self, dim: int, atoms: Sequence[GaussianAtom] = ()):
        if dim not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        atoms = tuple(atoms)
        for a in atoms:
            if a.dim != dim:
                raise ValueError("all atoms must share the mix dimension")
        self.dim = dim
        self.atoms = atoms
        n = len(atoms)
        self._amp = np.array([a.amplitude for a in atoms], dtype=complex).reshape(n)
        self._c = np.array([a.center for a in atoms], dtype=float).reshape(n, dim)
        self._b = np.array([a.modulation for a in atoms], dtype=float).reshape(n, dim)
        self._S = np.array([a.shape for a in atoms], dtype=float).reshape(n, dim, dim)

    def __repr__(self):
        return f"SchwartzMix(dim={self.dim}, atoms={len(self.atoms)})"

    def __len__(self):
        return len(self.atoms)

    def __add__(self, other: "SchwartzMix") -> "SchwartzMix":
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        return SchwartzMix(self.dim, self.atoms + other.atoms)

    def scale(self, factor: complex) -> "SchwartzMix":
        return SchwartzMix(self.dim, [GaussianAtom(a.amplitude * factor, a.center, a.modulation, a.shape)
                                      for a in self.atoms])

    @classmethod
    def single(cls, atom: GaussianAtom) -> "SchwartzMix":
        return cls(atom.dim, [atom])

    # -- evaluation ---------------------------------------------------------
    def evaluate(self, x) -> np.ndarray:
        """Vectorised evaluation at points of shape (..., dim)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected points of dimension {self.dim}, got {x.shape[-1]}")
        out = np.zeros(x.shape[:-1], dtype=complex)
        for j in range(len(self.atoms)):
            u = x - self._c[j]
            q = np.einsum("...i,ij,...j->...", u, self._S[j], u)
            out += self._amp[j] * np.exp(-math.pi * q + 1j * TWO_PI * (x @ self._b[j]))
        return out

    __call__ = evaluate

    # -- envelopes -----------------------------------------------------------
    def support_box(self, level: float) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned box outside which every atom is below ``level``."""
        lo = np.full(self.dim, np.inf)
        hi = np.full(self.dim, -np.inf)
        for a in self.atoms:
            w = a.axis_halfwidth(level)
            if np.all(w == 0):
                continue
            lo = np.minimum(lo, a.center - w)
            hi = np.maximum(hi, a.center + w)
        if not np.all(np.isfinite(lo)):
            z = np.zeros(self.dim)
            return z, z
        return lo, hi

    def support_interval(self, level: float) -> tuple[float, float]:
        lo, hi = self.support_box(level)
        return float(lo[0]), float(hi[0])

    def envelope(self, x) -> np.ndarray:
        """Pointwise upper bound sum |a| exp(-pi lambda_min |x-c|^2)."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for j, a in enumerate(self.atoms):
            lam = np.linalg.eigvalsh(a.shape).min()
            out += abs(a.amplitude) * np.exp(-math.pi * lam * ((x - a.center) ** 2).sum(-1))
        return out

    def max_abs_amplitude(self) -> float:
        return float(np.abs(self._amp).sum()) if len(self.atoms) else 0.0

    # -- serialisation -------------------------------------------------------
    def to_json(self) -> dict:
        return {"dim": self.dim, "atoms": [a.to_json() for a in self.atoms]}

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, d: dict) -> "SchwartzMix":
        if set(d) - {"dim", "atoms"}:
            raise ValueError(f"unknown mix keys: {sorted(set(d) - {'dim', 'atoms'})}")
        return cls(int(d["dim"]), [GaussianAtom.from_json(a) for a in d["atoms"]])

    @classmethod
    def loads(cls, s: str) -> "SchwartzMix":
        return cls.from_json(json.loads(s))

    def batch1d(self, n_points: int = 1) -> "AtomBatch1D":
        if self.dim != 1:
            raise ValueError("batch1d needs a one-dimensional mix")
        P = n_points
        return AtomBatch1D(
            amp=np.broadcast_to(self._amp, (P, len(self))).copy(),
            center=np.broadcast_to(self._c[:, 0], (P, len(self))).copy(),
            shape=np.broadcast_to(self._S[:, 0, 0], (P, len(self))).copy(),
            mod=np.broadcast_to(self._b[:, 0], (P, len(self))).copy(),
        )


class DerivativeMix:
    """Exact derivative of a one-dimensional mix.

    Atom ``a exp(-pi k (x-c)^2 + 2 pi i b x)`` differentiates to the same
    atom times ``2 pi (i b - k (x - c))``.
    """

    dim = 1

    def __init__(self, mix: SchwartzMix):
        if mix.dim != 1:
            raise ValueError("DerivativeMix needs a one-dimensional mix")
        self.mix = mix

    def __len__(self):
        return len(self.mix)

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != 1:
            raise ValueError("expected points of dimension 1")
        xs = x[..., 0]
        out = np.zeros(xs.shape, dtype=complex)
        for a in self.mix.atoms:
            k, c, b = a.shape[0, 0], a.center[0], a.modulation[0]
            u = xs - c
            out += (a.amplitude * np.exp(-math.pi * k * u * u + 1j * TWO_PI * b * xs)
                    * TWO_PI * (1j * b - k * u))
        return out

    __call__ = evaluate

    def support_interval(self, level: float) -> tuple[float, float]:
        # |2 pi (i b - k u)| e^{-pi k u^2} <= (2 pi |b| + 2 sqrt(pi k / e)) e^{-pi k u^2 / 2}
        lo, hi = math.inf, -math.inf
        for a in self.mix.atoms:
            k, c, b = a.shape[0, 0], a.center[0], a.modulation[0]
            amp = abs(a.amplitude) * (TWO_PI * abs(b) + 2.0 * math.sqrt(math.pi * k / math.e))
            if amp <= level:
                continue
            w = math.sqrt(2.0 * math.log(amp / level) / (math.pi * k))
            lo, hi = min(lo, c - w), max(hi, c + w)
        if lo > hi:
            return 0.0, 0.0
        return lo, hi

    def support_box(self, level: float):
        lo, hi = self.support_interval(level)
        return np.array([lo]), np.array([hi])

    def max_abs_amplitude(self) -> float:
        return max((abs(a.amplitude) * (TWO_PI * abs(a.modulation[0]) + 2.0 * math.sqrt(math.pi * a.shape[0, 0] / math.e))
                    for a in self.mix.atoms), default=0.0)


def eval_mix(mix: SchwartzMix, x) -> complex:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (mix.dim,):
        raise ValueError("dimension mismatch between point and mix")
    return complex(mix.evaluate(x))


# ---------------------------------------------------------------------------
# Batched one-dimensional mixtures (fibers and their relatives)
# ---------------------------------------------------------------------------

@dataclass
class AtomBatch1D:
    """P independent 1-D mixtures of A atoms, evaluated in lockstep.

    Atom ``j`` of row ``p`` is
    ``amp * (1 + slope (x - center)) * exp(-pi shape (x-center)^2 + 2 pi i mod x)``;
    the optional linear factor carries exact derivatives of Gaussians.
    """

    amp: np.ndarray
    center: np.ndarray
    shape: np.ndarray
    mod: np.ndarray
    slope: np.ndarray | None = None

    @property
    def n_rows(self) -> int:
        return self.amp.shape[0]

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """``x`` has shape (P, Q); returns (P, Q)."""
        u = x[:, :, None] - self.center[:, None, :]
        e = np.exp(-math.pi * self.shape[:, None, :] * u * u
                   + 1j * TWO_PI * self.mod[:, None, :] * x[:, :, None])
        if self.slope is not None:
            e = e * (1.0 + self.slope[:, None, :] * u)
        return np.einsum("pqa,pa->pq", e, self.amp)

    def support(self, level: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-row interval (lo, hi) and an emptiness mask."""
        a = np.abs(self.amp)
        if self.slope is not None:
            # |1 + s u| e^{-pi k u^2} <= (1 + |s| / sqrt(pi k e)) e^{-pi k u^2 / 2}
            k = self.shape / 2.0
            a = a * (1.0 + np.abs(self.slope) / np.sqrt(2.0 * math.pi * math.e * k))
        else:
            k = self.shape
        live = a > level
        w = np.sqrt(np.log(np.where(live, a / level, 1.0)) / (math.pi * k))
        lo = np.where(live, self.center - w, np.inf).min(axis=1)
        hi = np.where(live, self.center + w, -np.inf).max(axis=1)
        empty = ~np.any(live, axis=1)
        lo = np.where(empty, 0.0, lo)
        hi = np.where(empty, 0.0, hi)
        return lo, hi, empty

    def scaled(self, factor: np.ndarray) -> "AtomBatch1D":
        return AtomBatch1D(self.amp * np.asarray(factor)[:, None], self.center, self.shape, self.mod, self.slope)


# ---------------------------------------------------------------------------
# Closed-form operations
# ---------------------------------------------------------------------------

def fourier(mix: SchwartzMix) -> SchwartzMix:
    """Exact transform, convention int f(x) exp(-2 pi i xi.x) dx.

    The atom (a, c, b, S) maps to amplitude a det(S)^{-1/2} e^{2 pi i b.c},
    center b, modulation -c and shape S^{-1}.
    """
    out = []
    for a in mix.atoms:
        amp = a.amplitude / math.sqrt(np.linalg.det(a.shape)) * np.exp(1j * TWO_PI * float(a.modulation @ a.center))
        out.append(GaussianAtom(amp, a.modulation, -a.center, np.linalg.inv(a.shape)))
    return SchwartzMix(mix.dim, out)


def fiber(mix: SchwartzMix, x2: float) -> SchwartzMix:
    """Restriction x1 -> mix(x1, x2) as a one-dimensional mixture."""
    if mix.dim != 2:
        raise ValueError("fiber needs a two-dimensional mix")
    x2 = float(x2)
    out = []
    for a in mix.atoms:
        S = a.shape
        d2 = x2 - a.center[1]
        schur = np.linalg.det(S) / S[0, 0]
        amp = a.amplitude * np.exp(-math.pi * schur * d2 * d2 + 1j * TWO_PI * a.modulation[1] * x2)
        c1 = a.center[0] - S[0, 1] * d2 / S[0, 0]
        out.append(GaussianAtom(amp, [c1], [a.modulation[0]], [[S[0, 0]]]))
    return SchwartzMix(1, out)


def scaled_fiber(mix: SchwartzMix, x2: float) -> SchwartzMix:
    """The rescaled fiber ``x -> sgn(x2) mix(x x2, x2)`` as a 1-D mixture."""
    x2 = float(x2)
    if x2 == 0:
        raise SingularPointError("scaled fiber at x2 = 0")
    sg = math.copysign(1.0, x2)
    out = [GaussianAtom(sg * a.amplitude, a.center / x2, a.modulation * x2, a.shape * x2 * x2)
           for a in fiber(mix, x2).atoms]
    return SchwartzMix(1, out)


def scaled_fiber_batch(mix: SchwartzMix, x2: np.ndarray) -> AtomBatch1D:
    """Rows ``x -> sgn(x2) mix(x x2, x2)`` for an array of x2 values.

    This is the rescaled fiber used by the fiberwise evaluator; x2 must be
    non-zero.
    """
    if mix.dim != 2:
        raise ValueError("scaled fibers need a two-dimensional mix")
    x2 = np.asarray(x2, dtype=float)
    P, A = x2.size, len(mix)
    S11 = mix._S[:, 0, 0][None, :]
    S12 = mix._S[:, 0, 1][None, :]
    det = np.linalg.det(mix._S)[None, :] if A else np.zeros((1, 0))
    d2 = x2[:, None] - mix._c[:, 1][None, :]
    amp = mix._amp[None, :] * np.exp(-math.pi * (det / S11) * d2 * d2
                                     + 1j * TWO_PI * mix._b[:, 1][None, :] * x2[:, None])
    amp = amp * np.sign(x2)[:, None]
    c1 = mix._c[:, 0][None, :] - S12 * d2 / S11
    # substitute x1 = x * x2
    return AtomBatch1D(
        amp=amp,
        center=c1 / x2[:, None],
        shape=S11 * x2[:, None] ** 2,
        mod=mix._b[:, 0][None, :] * x2[:, None],
    )


def dilate(mix: SchwartzMix, A) -> SchwartzMix:
    """x -> sgn(det A) |det A|^{-1/3} mix(A^{-1} x)."""
    if mix.dim != 2:
        raise ValueError("dilation acts on two-dimensional mixes")
    A = np.asarray(A, dtype=float)
    if A.shape != (2, 2):
        raise ValueError("A must be 2x2")
    det = float(np.linalg.det(A))
    if det == 0 or abs(det) < 1e-14 * max(1.0, np.abs(A).max() ** 2):
        raise np.linalg.LinAlgError("singular dilation matrix")
    Ai = np.linalg.inv(A)
    factor = math.copysign(1.0, det) * abs(det) ** (-1.0 / 3.0)
    out = []
    for a in mix.atoms:
        out.append(GaussianAtom(a.amplitude * factor, A @ a.center, Ai.T @ a.modulation, Ai.T @ a.shape @ Ai))
    return SchwartzMix(2, out)


def modulate(mix: SchwartzMix, b) -> SchwartzMix:
    """x -> exp(2 pi i b.x) mix(x)."""
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if b.size != mix.dim:
        raise ValueError("modulation vector has the wrong dimension")
    return SchwartzMix(mix.dim, [GaussianAtom(a.amplitude, a.center, a.modulation + b, a.shape)
                                 for a in mix.atoms])


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------

def _norm_level(p: float, quad: QuadratureSpec) -> float:
    return (quad.tail_level) ** (1.0 / p)


def lp_norm(mix: SchwartzMix, p: float, quad: QuadratureSpec) -> float:
    """(int |mix|^p)^{1/p} by adaptive cubature over the envelope box."""
    if p == math.inf:
        return sup_norm(mix)
    if not p >= 1:
        raise ValueError("lp_norm needs p >= 1")
    if len(mix) == 0:
        return 0.0
    lo, hi = mix.support_box(_norm_level(p, quad))
    if np.all(lo == hi):
        return 0.0
    res = adaptive_nd(lambda x: np.abs(mix.evaluate(x)) ** p, lo, hi,
                      quad.with_(abs_tol=quad.abs_tol), route="lp_norm")
    if not res.converged:
        import warnings
        from .quadrature import QuadratureWarning
        warnings.warn(f"lp_norm did not converge (error {res.error_estimate:.3g})", QuadratureWarning)
    return float(res.value.real) ** (1.0 / p)


def sup_norm(mix: SchwartzMix, grid: int = 65, rounds: int = 30) -> float:
    """Grid supremum of |mix|; a lower bound on the true sup norm.

    A uniform grid over the envelope box is followed by ``rounds`` local
    grids, each centred on the current best point with half the spacing.
    """
    if len(mix) == 0:
        return 0.0
    lo, hi = mix.support_box(1e-3 * mix.max_abs_amplitude())
    step = (hi - lo) / (grid - 1)
    axes = [np.linspace(lo[i], hi[i], grid) for i in range(mix.dim)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, mix.dim)
    # atom centres are natural candidates
    pts = np.concatenate([pts, mix._c])
    vals = np.abs(mix.evaluate(pts))
    best = pts[np.argmax(vals)]
    best_val = vals.max()
    for _ in range(rounds):
        step = step / 2.0
        axes = [best[i] + step[i] * np.arange(-4, 5) for i in range(mix.dim)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, mix.dim)
        vals = np.abs(mix.evaluate(pts))
        if vals.max() > best_val:
            best_val = vals.max()
            best = pts[np.argmax(vals)]
    return float(best_val)


def mixed_norm(mix: SchwartzMix, p1: float, p2: float, quad: QuadratureSpec) -> float:
    """Iterated norm: L^{p1} in x1 on each fiber, then L^{p2} in x2."""
    if mix.dim != 2:
        raise ValueError("mixed norms need a two-dimensional mix")
    if not (p1 >= 1 and p2 >= 1) or math.isinf(p1) or math.isinf(p2):
        raise ValueError("mixed_norm needs finite exponents >= 1")
    if len(mix) == 0:
        return 0.0
    level = _norm_level(min(p1, p2), quad)
    lo, hi = mix.support_box(level)

    def inner(x2: float) -> float:
        fb = fiber(mix, x2)
        a, b = fb.support_interval(_norm_level(p1, quad))
        if a == b:
            return 0.0
        vals, _, _ = integrate_box(lambda x: np.abs(fb.evaluate(x)) ** p1, [a], [b],
                                   rel_tol=quad.rel_tol, abs_tol=quad.abs_tol * 1e-3,
                                   max_depth=quad.max_depth, initial_splits=[4])
        return max(vals[0].real, 0.0) ** (1.0 / p1)

    def outer(x):
        return np.array([inner(v) ** p2 for v in x[:, 0]])

    vals, _, _ = integrate_box(outer, [lo[1]], [hi[1]], rel_tol=quad.rel_tol, abs_tol=quad.abs_tol,
                               max_depth=quad.max_depth, initial_splits=[4])
    return float(vals[0].real) ** (1.0 / p2)


# ---------------------------------------------------------------------------
# Spectra
# ---------------------------------------------------------------------------

class SpectrumFunction:
    """A point-evaluable function on R^2 with a declared envelope.

    ``box`` bounds the region where the function is non-negligible;
    ``bound`` is a pointwise majorant used for spot checks.  A spectrum that
    came from a :class:`SchwartzMix` keeps it in ``mix`` so evaluators can
    use closed forms.
    """

    def __init__(self, func: Callable[[np.ndarray], np.ndarray], box, bound=None,
                 mix: SchwartzMix | None = None, name: str = "generic", level: float = 0.0):
        self.func = func
        self.level = level
        lo, hi = box
        self.box = (np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
        self.bound = bound
        self.mix = mix
        self.name = name

    def __repr__(self):
        return f"SpectrumFunction({self.name}, box={self.box[0].tolist()}..{self.box[1].tolist()})"

    def __call__(self, xi) -> np.ndarray:
        return self.func(np.asarray(xi, dtype=float))

    @property
    def is_closed_form(self) -> bool:
        return self.mix is not None

    @classmethod
    def from_mix(cls, mix: SchwartzMix, level: float = 1e-16, name: str = "closed-form") -> "SpectrumFunction":
        if mix.dim != 2:
            raise ValueError("spectra live on R^2")
        return cls(mix.evaluate, mix.support_box(level), mix.envelope, mix=mix, name=name, level=level)

    def as_generic(self) -> "SpectrumFunction":
        """Same function without the closed form (forces generic quadrature)."""
        return SpectrumFunction(self.func, self.box, self.bound, None, name=self.name + "/generic",
                                level=self.level)

    def check_envelope(self, n: int = 512, seed: int = 0, spread: float = 2.0) -> bool:
        """Spot-check |f| <= bound at random points around the box."""
        if self.bound is None:
            return True
        rng = np.random.default_rng(seed)
        lo, hi = self.box
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo) + 1.0
        pts = mid + spread * half * rng.uniform(-1, 1, size=(n, 2))
        vals = np.abs(self.func(pts))
        bnd = self.bound(pts)
        return bool(np.all(vals <= bnd * (1 + 1e-9) + 1e-300))


def _projective_map(M: np.ndarray, xi: np.ndarray):
    ones = np.ones(xi.shape[:-1] + (1,))
    hom = np.concatenate([ones, xi], axis=-1) @ M.T
    with np.errstate(divide="ignore", invalid="ignore"):
        # points with hom_0 = 0 are rejected by the callers
        return hom[..., 0], hom[..., 1:] / hom[..., :1]


def projective_spectrum(spec: SpectrumFunction, M, *, samples: int = 41) -> SpectrumFunction:
    """Spectrum transformed by the GL_3 action.

    ``xi -> sgn(det M) |det M|^{-1/3} |det d(breve xi)/d xi| tilde_xi_0 spec(breve xi)``
    where ``tilde_xi = M (1, xi)`` and ``breve xi`` is its dehomogenisation.
    The Jacobian of the projective map is ``det M / tilde_xi_0^3``.
    """
    M = np.asarray(M, dtype=float)
    if M.shape != (3, 3):
        raise ValueError("M must be 3x3")
    detM = float(np.linalg.det(M))
    if abs(detM) < 1e-14:
        raise np.linalg.LinAlgError("singular projective matrix")
    if np.array_equal(M, np.eye(3)):
        return spec
    pref = math.copysign(1.0, detM) * abs(detM) ** (-1.0 / 3.0)

    def factor_and_point(xi):
        t0, breve = _projective_map(M, xi)
        if np.any(t0 == 0):
            raise SingularPointError("evaluation on the line tilde_xi_0 = 0")
        jac = abs(detM) / np.abs(t0) ** 3
        return pref * jac * t0, breve

    def func(xi):
        fac, breve = factor_and_point(np.asarray(xi, dtype=float))
        return fac * spec.func(breve)

    bound = None
    if spec.bound is not None:
        def bound(xi):
            fac, breve = factor_and_point(np.asarray(xi, dtype=float))
            return np.abs(fac) * spec.bound(breve)

    name = f"projective({spec.name})"
    if spec.mix is not None and M[0, 1] == 0 and M[0, 2] == 0:
        # affine case: breve xi = (M[1:, 0] + M[1:, 1:] xi) / m00 keeps Gaussians Gaussian
        m00 = M[0, 0]
        A = M[1:, 1:] / m00
        t = M[1:, 0] / m00
        const = pref * abs(detM) / abs(m00) ** 3 * m00
        out = []
        for a in spec.mix.atoms:
            c = np.linalg.solve(A, a.center - t)
            amp = const * a.amplitude * np.exp(1j * TWO_PI * float(a.modulation @ t))
            out.append(GaussianAtom(amp, c, A.T @ a.modulation, A.T @ a.shape @ A))
        return SpectrumFunction.from_mix(SchwartzMix(2, out), name=name)

    # envelope box: pull back the part of the original box where the
    # transformed envelope is above the original level
    Minv = np.linalg.inv(M)
    lo, hi = spec.box
    g = np.linspace(0.0, 1.0, samples)
    grid = np.stack(np.meshgrid(lo[0] + g * (hi[0] - lo[0]), lo[1] + g * (hi[1] - lo[1]), indexing="ij"), -1)
    grid = grid.reshape(-1, 2)
    s0, pre = _projective_map(Minv, grid)
    if np.any(s0 == 0) or (np.any(s0 > 0) and np.any(s0 < 0)):
        raise SingularPointError("spectrum envelope meets the line sent to infinity; "
                                 "the transformed spectrum has no bounded envelope")
    if bound is not None and spec.level > 0:
        env = bound(pre)
        keep = env >= spec.level
        if np.count_nonzero(keep) >= 4:
            pre = pre[keep]
    # pad by two grid spacings measured in the image
    span = pre.max(axis=0) - pre.min(axis=0)
    pad = 2.0 * span / (samples - 1)
    box = (pre.min(axis=0) - pad, pre.max(axis=0) + pad)
    return SpectrumFunction(func, box, bound, None, name=name, level=spec.level)


# ---------------------------------------------------------------------------
# Exponents
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentTriple:
    p: float
    q: float
    r: float
    mixed: tuple | None = None  # ((p1, p2), (q1, q2), (r1, r2))

    @property
    def holder_sum(self) -> float:
        return 1.0 / self.p + 1.0 / self.q + 1.0 / self.r

    @property
    def is_holder(self) -> bool:
        return abs(self.holder_sum - 1.0) < 1e-12

    @property
    def regular(self) -> bool:
        """True when 2 < p, q, r < infinity and the Holder relation holds."""
        return self.is_holder and all(2 < e < math.inf for e in (self.p, self.q, self.r))

    def angular_exponents(self) -> tuple[float, float, float]:
        """Powers of |e_i(theta)|^{-1} in the angular certificate integral."""
        if self.mixed is None:
            return 2.0 / self.p, 2.0 / self.q, 2.0 / self.r
        return tuple(1.0 / a + 1.0 / b for a, b in self.mixed)

    def mixed_admissible(self) -> bool:
        if self.mixed is None:
            return self.regular
        (p1, p2), (q1, q2), (r1, r2) = self.mixed
        sums_ok = all(abs(1 / a + 1 / b + 1 / c - 1) < 1e-12 for a, b, c in ((p1, q1, r1), (p2, q2, r2)))
        return sums_ok and all(s < 1 for s in self.angular_exponents()) and all(
            math.isfinite(e) for pair in self.mixed for e in pair)
