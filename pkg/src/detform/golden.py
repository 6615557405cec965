"""Reference inputs: the golden triple and seeded random Gaussian triples."""

from __future__ import annotations

import numpy as np

from .schwartz import GaussianAtom, SchwartzMix

__all__ = ["golden_triple", "projective_triple", "random_triple", "random_spd", "random_matrix"]

GOLDEN_CENTERS = ((1.0, 0.0), (0.0, 1.0), (-1.0, -1.0))


def _single(center, modulation=(0.0, 0.0), shape=None, amplitude=1.0) -> SchwartzMix:
    atom = GaussianAtom.standard(2, amplitude=amplitude, center=np.asarray(center, float),
                                 modulation=np.asarray(modulation, float), shape=shape)
    return SchwartzMix(2, [atom])


def golden_triple(modulation=(0.0, 0.0)) -> tuple[SchwartzMix, SchwartzMix, SchwartzMix]:
    """Unit isotropic Gaussians centred at (1,0), (0,1), (-1,-1)."""
    return tuple(_single(c, modulation) for c in GOLDEN_CENTERS)


# centred anisotropic shapes: real positive spectra, so projective maps only bend
# their envelopes instead of turning the centre phases into chirps
PROJECTIVE_SHAPES = (((1.0, 0.5), (0.5, 1.0)), ((2.0, -0.3), (-0.3, 0.7)), ((0.6, 0.2), (0.2, 1.5)))
PROJECTIVE_MODULATION = (20.0, 0.0)


def projective_triple(modulation=PROJECTIVE_MODULATION) -> tuple[SchwartzMix, SchwartzMix, SchwartzMix]:
    """Input for the rotation check.

    A common modulation moves all spectra far from xi_1 = 0, where the
    rotation is nearly affine on the envelopes.
    """
    return tuple(_single((0.0, 0.0), modulation, np.array(S)) for S in PROJECTIVE_SHAPES)


def random_spd(rng: np.random.Generator, lo: float = 0.6, hi: float = 1.8) -> np.ndarray:
    ev = rng.uniform(lo, hi, size=2)
    a = rng.uniform(0, np.pi)
    R = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
    return R @ np.diag(ev) @ R.T


def random_triple(seed: int, atoms: int = 1) -> tuple[SchwartzMix, SchwartzMix, SchwartzMix]:
    """Three mixtures with centres in [-1.2, 1.2]^2, modest modulations and shapes."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(3):
        parts = []
        for _ in range(atoms):
            amp = rng.uniform(0.5, 1.5) * np.exp(1j * rng.uniform(0, 2 * np.pi))
            parts.append(GaussianAtom(amp, rng.uniform(-1.2, 1.2, 2), rng.uniform(-0.5, 0.5, 2),
                                      random_spd(rng)))
        out.append(SchwartzMix(2, parts))
    return tuple(out)


def random_matrix(rng: np.random.Generator, max_cond: float = 10.0, negative: bool | None = None,
                  max_tries: int = 1000) -> np.ndarray:
    """2x2 matrix with entries of order one and condition number <= max_cond.

    ``negative`` forces the sign of the determinant when given.
    """
    for _ in range(max_tries):
        A = rng.uniform(-1.5, 1.5, size=(2, 2))
        d = np.linalg.det(A)
        if abs(d) < 0.2 or np.linalg.cond(A) > max_cond:
            continue
        if negative is not None and (d < 0) != negative:
            continue
        return A
    raise RuntimeError("could not draw a well-conditioned matrix")
