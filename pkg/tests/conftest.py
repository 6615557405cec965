import math
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings, strategies as st

from detform import GaussianAtom, QuadratureSpec, SchwartzMix

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


def spd(draw, lo=0.5, hi=2.0):
    ev = [draw(st.floats(lo, hi)) for _ in range(2)]
    a = draw(st.floats(0, math.pi))
    R = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
    return R @ np.diag(ev) @ R.T


@st.composite
def atoms2(draw, max_center=1.5, max_mod=1.0):
    re = draw(st.floats(-1.5, 1.5))
    im = draw(st.floats(-1.5, 1.5))
    c = [draw(st.floats(-max_center, max_center)) for _ in range(2)]
    b = [draw(st.floats(-max_mod, max_mod)) for _ in range(2)]
    return GaussianAtom(complex(re, im) or 1.0, c, b, spd(draw))


@st.composite
def mixes2(draw, max_atoms=3):
    n = draw(st.integers(1, max_atoms))
    return SchwartzMix(2, [draw(atoms2()) for _ in range(n)])


@st.composite
def mixes1(draw, max_atoms=2):
    n = draw(st.integers(1, max_atoms))
    out = []
    for _ in range(n):
        out.append(GaussianAtom(complex(draw(st.floats(-1.5, 1.5)), draw(st.floats(-1.5, 1.5))) or 1.0,
                                [draw(st.floats(-1.5, 1.5))], [draw(st.floats(-1, 1))],
                                [[draw(st.floats(0.4, 2.5))]]))
    return SchwartzMix(1, out)


def one_d(c=0.0, b=0.0, k=1.0, amp=1.0):
    return SchwartzMix(1, [GaussianAtom(amp, [c], [b], [[k]])])


def two_d(c=(0.0, 0.0), b=(0.0, 0.0), S=None, amp=1.0):
    return SchwartzMix(2, [GaussianAtom(amp, list(c), list(b), np.eye(2) if S is None else S)])


@pytest.fixture
def tight():
    return QuadratureSpec(rel_tol=1e-10, abs_tol=1e-13)


@pytest.fixture
def medium():
    return QuadratureSpec(rel_tol=1e-5)


def random_1d_triple(seed):
    """Three single-atom 1-D mixes with modest offsets, widths and modulations."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(3):
        amp = rng.uniform(0.5, 1.5) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        out.append(SchwartzMix(1, [GaussianAtom(amp, [rng.uniform(-0.8, 0.8)], [rng.uniform(-0.4, 0.4)],
                                                [[rng.uniform(0.6, 1.6)]])]))
    return tuple(out)


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
