import numpy as np
import pytest

from detform import EvalResult, QuadratureSpec, golden_triple
from detform.golden import random_matrix
from detform.symmetries import (SymmetryReport, check_alternating, check_dilation, check_modulation,
                                check_permutations, check_projective, harness_tolerance)

Q = QuadratureSpec(rel_tol=1e-5)


@pytest.fixture(scope="module")
def golden():
    return golden_triple()


@pytest.fixture(scope="module")
def base(golden):
    from detform import evaluate
    return evaluate("direct", *golden, Q)


def test_harness_tolerance():
    a = EvalResult(1.0, 1e-6, "x")
    b = EvalResult(1.0001, 2e-6, "y")
    assert harness_tolerance(a, b) == pytest.approx(1.0001e-3)
    c = EvalResult(1e-3, 1e-4, "z")
    assert harness_tolerance(c, c) == pytest.approx(6e-4)
    rep = SymmetryReport.compare("t", a, b)
    assert rep.passed == (rep.abs_diff <= rep.tolerance)
    assert rep.to_record()["pass"] is rep.passed


def test_dilation_identity_is_exact(golden, base):
    rep = check_dilation(*golden, np.eye(2), "direct", Q, base=base)
    assert rep.abs_diff == 0 and rep.passed


def test_dilation_diag(golden, base):
    rep = check_dilation(*golden, np.diag([2.0, 1 / 3]), "direct", Q, base=base)
    assert rep.passed, rep.to_record()


def test_dilation_negative_determinant(golden, base):
    A = random_matrix(np.random.default_rng(5), negative=True)
    assert np.linalg.det(A) < 0 and np.linalg.cond(A) <= 10
    rep = check_dilation(*golden, A, "direct", Q, base=base)
    assert rep.passed, rep.to_record()


def test_modulation_zero_is_exact(golden, base):
    rep = check_modulation(*golden, (0.0, 0.0), "direct", Q, base=base)
    assert rep.abs_diff == 0 and rep.passed


@pytest.mark.parametrize("b", [(1.0, 2.0), (0.0, 5.0)])
def test_modulation(golden, base, b):
    rep = check_modulation(*golden, b, "direct", Q, base=base)
    assert rep.passed, rep.to_record()


def test_permutations(golden):
    reps = check_permutations(*golden, "direct", Q)
    assert len(reps) == 6
    assert all(r.passed for r in reps)
    signs = sorted(r.params["sign"] for r in reps)
    assert signs == [-1, -1, -1, 1, 1, 1]
    # a transposition really flips the raw value
    flip = next(r for r in reps if r.params["perm"] == [1, 0, 2])
    assert np.sign(flip.lhs.value.real) == np.sign(flip.rhs.value.real)


def test_alternating(golden):
    f, _, h = golden
    assert check_alternating(f, h, "direct", Q).passed


def test_projective_identity(golden):
    rep = check_projective(*golden, np.eye(3), Q)
    assert rep.abs_diff == 0 and rep.passed


def test_projective_blockdiag_matches_dilation(golden):
    L = random_matrix(np.random.default_rng(11))
    M = np.eye(3)
    M[1:, 1:] = L
    proj = check_projective(*golden, M, Q)
    dil = check_dilation(*golden, L.T, "frequency", Q)
    assert proj.passed and dil.passed
    assert abs(proj.lhs.value - dil.lhs.value) <= harness_tolerance(proj.lhs, dil.lhs)


def test_projective_singular_matrix_rejected(golden):
    with pytest.raises(np.linalg.LinAlgError):
        check_projective(*golden, np.zeros((3, 3)), Q, base=EvalResult(0.0, 0.0, "stub"))
