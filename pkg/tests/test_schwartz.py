import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import atoms2, mixes1, mixes2, one_d, two_d
from detform import ExponentTriple, GaussianAtom, QuadratureSpec, SchwartzMix, SpectrumFunction
from detform.schwartz import (DerivativeMix, SingularPointError, dilate, eval_mix, fiber, fourier,
                              lp_norm, mixed_norm, modulate, projective_spectrum, scaled_fiber,
                              scaled_fiber_batch, sup_norm)

Q = QuadratureSpec(rel_tol=1e-9, abs_tol=1e-12)
RNG = np.random.default_rng(7)


def test_eval_examples():
    m = two_d()
    assert eval_mix(m, [0, 0]) == pytest.approx(1.0)
    assert eval_mix(m, [1, 0]) == pytest.approx(math.exp(-math.pi), rel=1e-14)
    assert eval_mix(two_d(b=(3, 4)), [0, 0]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        eval_mix(m, [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        m.evaluate(np.zeros((4, 3)))


def test_atom_validation():
    with pytest.raises(ValueError):
        GaussianAtom(1.0, [0, 0], [0, 0], [[1, 0], [0, -1]])
    with pytest.raises(ValueError):
        GaussianAtom(1.0, [0, 0], [0], np.eye(2))
    with pytest.raises(ValueError):
        SchwartzMix(2, [GaussianAtom(1.0, [0], [0], [[1]])])


def test_empty_mix_is_zero():
    m = SchwartzMix(2, [])
    assert np.all(m.evaluate(RNG.normal(size=(5, 2))) == 0)
    assert lp_norm(m, 2, Q) == 0.0


def test_json_roundtrip():
    m = SchwartzMix(2, [GaussianAtom(1 + 2j, [1, 0], [0.3, -0.1], [[2, 0.3], [0.3, 1]])])
    back = SchwartzMix.loads(m.dumps())
    x = RNG.normal(size=(6, 2))
    assert np.allclose(back.evaluate(x), m.evaluate(x), rtol=0, atol=1e-15)
    with pytest.raises(ValueError):
        SchwartzMix.from_json({"dim": 2, "atoms": [], "extra": 1})


def test_fourier_standard_atom_self_dual():
    m = two_d()
    x = RNG.normal(size=(8, 2))
    assert np.allclose(fourier(m).evaluate(x), m.evaluate(x), atol=1e-15)


def _dft(f, xi, L=16.0, n=256):
    # Riemann sum of f(x) e^{-2 pi i xi.x} on an n x n grid over [-L/2, L/2)^2
    g = -L / 2 + L * np.arange(n) / n
    X, Y = np.meshgrid(g, g, indexing="ij")
    pts = np.stack([X, Y], -1)
    vals = f.evaluate(pts)
    dx = L / n
    return np.array([np.sum(vals * np.exp(-2j * math.pi * (pts @ k))) * dx * dx for k in xi])


def test_fourier_matches_discrete_transform():
    m = two_d(c=(1, 0))
    xi = RNG.uniform(-2, 2, size=(6, 2))
    assert np.allclose(fourier(m).evaluate(xi), _dft(m, xi), rtol=0, atol=1e-6)
    m2 = SchwartzMix(2, [GaussianAtom(0.5 - 1j, [0.3, -0.7], [0.4, 0.2], [[1.3, 0.4], [0.4, 0.8]])])
    assert np.allclose(fourier(m2).evaluate(xi), _dft(m2, xi), rtol=0, atol=1e-6)


@given(mixes2())
def test_double_fourier_is_reflection(m):
    x = RNG.normal(size=(10, 2))
    assert np.allclose(fourier(fourier(m)).evaluate(x), m.evaluate(-x), rtol=0, atol=1e-10)


def test_fiber_examples():
    f0 = fiber(two_d(), 0.0)
    assert f0.dim == 1
    assert f0.evaluate(np.array([[0.0]]))[0] == pytest.approx(1.0)
    assert fiber(two_d(), 1.0).atoms[0].amplitude == pytest.approx(math.exp(-math.pi))


@given(atoms2(), st.floats(-2, 2))
def test_fiber_is_restriction(atom, x2):
    m = SchwartzMix(2, [atom])
    x1 = RNG.normal(size=10)
    pts = np.stack([x1, np.full(10, x2)], 1)
    assert np.allclose(fiber(m, x2).evaluate(x1[:, None]), m.evaluate(pts), rtol=0, atol=1e-12)


@given(mixes2(), st.floats(0.1, 3.0), st.booleans())
def test_scaled_fiber_identity(m, x2, neg):
    x2 = -x2 if neg else x2
    u = RNG.normal(size=12)
    expected = math.copysign(1, x2) * m.evaluate(np.stack([u * x2, np.full(12, x2)], 1))
    assert np.allclose(scaled_fiber(m, x2).evaluate(u[:, None]), expected, rtol=0, atol=1e-12)
    batch = scaled_fiber_batch(m, np.array([x2, 2 * x2]))
    assert np.allclose(batch.evaluate(np.stack([u, u]))[0], expected, rtol=0, atol=1e-12)


def test_scaled_fiber_rejects_zero():
    with pytest.raises(SingularPointError):
        scaled_fiber(two_d(), 0.0)


@given(mixes2(), st.floats(0.3, 2.5), st.floats(0.3, 2.5), st.floats(-2, 2))
def test_fiber_dilate_commute_for_diagonal(m, a, d, x2):
    A = np.diag([a, d])
    lhs = fiber(dilate(m, A), x2)
    x1 = RNG.normal(size=8)
    factor = abs(a * d) ** (-1 / 3)
    rhs = factor * fiber(m, x2 / d).evaluate((x1 / a)[:, None])
    assert np.allclose(lhs.evaluate(x1[:, None]), rhs, rtol=0, atol=1e-12)


def test_derivative_mix_matches_finite_differences():
    m = SchwartzMix(1, [GaussianAtom(1 - 0.5j, [0.2], [0.3], [[1.4]]), GaussianAtom(0.7, [-0.8], [0], [[0.6]])])
    d = DerivativeMix(m)
    x = RNG.uniform(-2, 2, size=20)
    h = 1e-5
    fd = (m.evaluate((x + h)[:, None]) - m.evaluate((x - h)[:, None])) / (2 * h)
    assert np.allclose(d.evaluate(x[:, None]), fd, rtol=0, atol=1e-6)
    lo, hi = d.support_interval(1e-12)
    xs = np.array([[lo - 0.01], [hi + 0.01]])
    assert np.all(np.abs(d.evaluate(xs)) < 1e-12)


def test_dilate_examples():
    m = two_d()
    assert dilate(m, np.eye(2)).atoms[0].amplitude == pytest.approx(1.0)
    a = dilate(m, 2 * np.eye(2)).atoms[0]
    assert a.amplitude == pytest.approx(4 ** (-1 / 3))
    assert np.allclose(a.shape, np.eye(2) / 4)
    with pytest.raises(np.linalg.LinAlgError):
        dilate(m, [[1, 2], [2, 4]])


@given(mixes2())
def test_dilate_pointwise_definition(m):
    A = RNG.uniform(-2, 2, size=(2, 2)) + np.eye(2) * 2.5
    det = np.linalg.det(A)
    x = RNG.normal(size=(10, 2))
    expected = np.sign(det) * abs(det) ** (-1 / 3) * m.evaluate(x @ np.linalg.inv(A).T)
    assert np.allclose(dilate(m, A).evaluate(x), expected, rtol=0, atol=1e-12)


def test_modulate_examples():
    m = two_d()
    mm = modulate(m, [1, 0])
    assert eval_mix(mm, [0, 0]) == pytest.approx(1.0)
    assert eval_mix(mm, [1, 0]) == pytest.approx(math.exp(-math.pi), abs=1e-15)
    assert modulate(m, [0, 0]).atoms[0].modulation.tolist() == [0.0, 0.0]


@given(mixes2(), st.floats(-3, 3), st.floats(-3, 3))
def test_modulate_inverse(m, b1, b2):
    x = RNG.normal(size=(6, 2))
    back = modulate(modulate(m, [b1, b2]), [-b1, -b2])
    assert np.allclose(back.evaluate(x), m.evaluate(x), rtol=0, atol=1e-13)


def test_lp_norm_examples():
    assert lp_norm(two_d(), 2, Q) == pytest.approx(2 ** -0.5, rel=1e-8)
    assert lp_norm(one_d(), 4, Q) == pytest.approx(4 ** (-1 / 8), rel=1e-8)
    with pytest.raises(ValueError):
        lp_norm(two_d(), 0.5, Q)


def test_lp_norm_two_atoms_monte_carlo():
    m = SchwartzMix(2, [GaussianAtom(1.0, [0.5, 0], [0, 0], np.eye(2)),
                        GaussianAtom(-0.6j, [-0.4, 0.3], [0.5, 0], [[2, 0.5], [0.5, 1]])])
    rng = np.random.default_rng(3)
    n = 400_000
    pts = rng.uniform(-4, 4, size=(n, 2))
    v = np.abs(m.evaluate(pts)) ** 3 * 64.0
    est, se = v.mean(), v.std(ddof=1) / math.sqrt(n)
    assert abs(lp_norm(m, 3, Q) ** 3 - est) <= 3 * se


def test_sup_norm_lower_bound():
    m = two_d(S=[[2, 0.4], [0.4, 1]], amp=1.7)
    s = sup_norm(m)
    assert s <= 1.7 + 1e-12
    assert s == pytest.approx(1.7, rel=1e-6)


def test_mixed_norm_separable_closed_form():
    # exp(-pi (x1^2 + x2^2)): inner L^2 -> 2^{-1/4} e^{-pi x2^2}, outer L^4 -> 4^{-1/8}
    assert mixed_norm(two_d(), 2, 4, Q) == pytest.approx(2 ** -0.25 * 4 ** (-1 / 8), rel=1e-8)
    assert mixed_norm(two_d(), 2, 2, Q) == pytest.approx(2 ** -0.5, rel=1e-8)
    S = np.diag([2.0, 0.5])
    # inner L^3 of exp(-2 pi x1^2) = (3*2)^{-1/6}; outer L^5 of exp(-pi x2^2/2) = (5/2)^{-1/10}
    assert mixed_norm(two_d(S=S), 3, 5, Q) == pytest.approx(6 ** (-1 / 6) * 2.5 ** (-0.1), rel=1e-8)


def test_mixed_norm_correlated_nested_oracle():
    from scipy import integrate

    S = np.array([[1.5, 0.6], [0.6, 0.9]])
    m = two_d(c=(0.2, -0.1), S=S)

    def inner(x2):
        v, _ = integrate.quad(lambda x1: abs(m.evaluate(np.array([x1, x2]))) ** 3, -8, 8,
                              epsabs=1e-13, epsrel=1e-12, limit=200)
        return v ** (1 / 3)

    outer, _ = integrate.quad(lambda x2: inner(x2) ** 4, -8, 8, epsabs=1e-13, epsrel=1e-11, limit=200)
    assert mixed_norm(m, 3, 4, Q) == pytest.approx(outer ** 0.25, rel=1e-7)


@given(mixes2(max_atoms=2))
def test_lp_norm_dilation_scaling(m):
    A = np.array([[1.3, 0.4], [-0.2, 0.8]])
    p = 3.0
    q = QuadratureSpec(rel_tol=1e-8, abs_tol=1e-11)
    lhs = lp_norm(dilate(m, A), p, q)
    rhs = abs(np.linalg.det(A)) ** (1 / p - 1 / 3) * lp_norm(m, p, q)
    assert lhs == pytest.approx(rhs, rel=2e-7)


@given(mixes2(max_atoms=2), st.floats(-3, 3), st.floats(-3, 3))
def test_lp_norm_modulation_invariant_single_atom(m, b1, b2):
    # exact for one atom, where |M_b f| = |f|
    single = SchwartzMix(2, m.atoms[:1])
    q = QuadratureSpec(rel_tol=1e-8, abs_tol=1e-11)
    assert lp_norm(modulate(single, [b1, b2]), 2.5, q) == pytest.approx(lp_norm(single, 2.5, q), rel=2e-7)


@given(mixes2(max_atoms=2))
def test_parseval(m):
    q = QuadratureSpec(rel_tol=1e-8, abs_tol=1e-11)
    assert lp_norm(fourier(m), 2, q) == pytest.approx(lp_norm(m, 2, q), rel=2e-7)


def test_spectrum_envelope_spot_check():
    m = SchwartzMix(2, [GaussianAtom(1 + 1j, [0.3, 0.2], [1, -1], [[1.2, 0.3], [0.3, 0.7]])])
    s = SpectrumFunction.from_mix(fourier(m))
    assert s.is_closed_form and s.check_envelope()
    assert not s.as_generic().is_closed_form


def _blockdiag(L):
    M = np.eye(3)
    M[1:, 1:] = L
    return M


def test_projective_identity_unchanged():
    s = SpectrumFunction.from_mix(fourier(two_d(c=(1, 0))))
    assert projective_spectrum(s, np.eye(3)) is s


def test_projective_blockdiag_is_dilation_on_fourier_side():
    m = SchwartzMix(2, [GaussianAtom(1 - 0.3j, [1, 0.2], [0.1, -0.4], [[1.2, 0.2], [0.2, 0.9]])])
    for L in (np.array([[2.0, 0.5], [0.1, 0.7]]), np.array([[0.0, 1.0], [1.0, 0.3]])):
        moved = projective_spectrum(SpectrumFunction.from_mix(fourier(m)), _blockdiag(L))
        # blockdiag(1, L) is D_A with A = L^T on the space side
        target = fourier(dilate(m, L.T))
        xi = RNG.normal(size=(10, 2))
        assert np.allclose(moved(xi), target.evaluate(xi), rtol=1e-12, atol=1e-14)


def test_projective_rotation_pointwise():
    from detform.symmetries import ROTATION

    m = two_d(c=(1, 0), b=(5, 0))
    fh = fourier(m)
    s = SpectrumFunction.from_mix(fh, level=1e-8)
    moved = projective_spectrum(s, ROTATION)
    xi = np.stack([RNG.uniform(-0.6, -0.1, 10), RNG.normal(size=10)], 1)
    x1 = xi[:, 0]
    expected = np.sign(x1) * x1 ** -2.0 * fh.evaluate(np.stack([-1 / x1, xi[:, 1] / x1], 1))
    assert np.allclose(moved(xi), expected, rtol=1e-12, atol=0)
    with pytest.raises(SingularPointError):
        moved(np.array([[0.0, 1.0]]))


def test_projective_rejects_unbounded_image():
    from detform.symmetries import ROTATION

    s = SpectrumFunction.from_mix(fourier(two_d()))
    with pytest.raises(SingularPointError):
        projective_spectrum(s, ROTATION)
    with pytest.raises(np.linalg.LinAlgError):
        projective_spectrum(s, np.zeros((3, 3)))


def test_exponent_triple_flags():
    assert ExponentTriple(3, 3, 3).regular
    assert not ExponentTriple(2, 4, 4).regular
    assert ExponentTriple(2, 4, 4).is_holder
    t = ExponentTriple(3, 3, 3, mixed=((3, 4), (3, 4), (3, 2)))
    assert t.mixed_admissible()
    assert not ExponentTriple(3, 3, 3, mixed=((3, 4), (3, 4), (3, 4))).mixed_admissible()
