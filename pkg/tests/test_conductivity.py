import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.linalg import expm

from dtnlab import (
    Circle,
    ConductivityField,
    ConfigError,
    HypothesisViolation,
    Sphere,
    StarShaped2D,
    anisotropic_demo,
    const_diag,
    identity,
    interior_ball,
    pullback_point,
    radial_scalar,
    validate_ellipticity,
)
from dtnlab.conductivity import gamma_from_config, sym_expm


def test_identity_constants():
    assert validate_ellipticity(identity(2), Circle(1.0)) == (1.0, 1.0)
    assert identity(3).is_identity


def test_const_diag_constants():
    c1, c2 = validate_ellipticity(const_diag([1.0, 4.0]), Circle(1.0))
    assert (c1, c2) == (1.0, 4.0)
    assert const_diag([2.0, 2.0]).constant_scalar == 2.0


def test_anisotropic_demo_constants():
    c1, c2 = validate_ellipticity(anisotropic_demo(0.3), Circle(1.0))
    assert_allclose(c1, 1.0)
    assert_allclose(c2, 1.3, rtol=1e-12)


def test_radial_scalar():
    g = radial_scalar([1.0, 0.5])
    assert_allclose(g(np.array([[0.6, 0.8]]))[0], 1.5 * np.eye(2))
    assert radial_scalar([3.0]).constant_scalar == 3.0


def test_asymmetric_field_violates_h1():
    bad = ConductivityField(lambda x: np.broadcast_to(np.array([[1.0, 0.1], [0.0, 1.0]]), (len(x), 2, 2)))
    with pytest.raises(HypothesisViolation, match="symmetry"):
        validate_ellipticity(bad, Circle(1.0))


def test_indefinite_field_violates_h2():
    with pytest.raises(HypothesisViolation, match="ellipticity"):
        validate_ellipticity(const_diag([1.0, -1.0]), Circle(1.0))


def test_sampling_covers_star_and_sphere():
    validate_ellipticity(identity(2), StarShaped2D.from_coeffs([1.0, 0.3]), samples=100)
    validate_ellipticity(identity(3), Sphere(1.0))


def test_gamma_from_config():
    assert gamma_from_config({"kind": "identity"}).is_identity
    assert gamma_from_config({"kind": "const_diag", "d": [1, 2]}).declared_c2 == 2.0
    assert gamma_from_config({"kind": "anisotropic_demo", "eps": 0.1}).tag == "anisotropic_demo(0.1)"
    with pytest.raises(ConfigError):
        gamma_from_config({"kind": "const_diag", "d": [1, 2, 3]}, dim=2)
    with pytest.raises(ConfigError):
        gamma_from_config({"kind": "identity", "eps": 1})


def test_sym_expm_matches_scipy():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((4, 3, 3))
    A = A + np.swapaxes(A, 1, 2)
    for a, e in zip(A, sym_expm(A)):
        assert_allclose(e, expm(a), rtol=1e-12, atol=1e-12)


def test_pullback_identity_ball_contracts_uniformly():
    omega = np.array([0.0, 1.0, 0.0])
    p = pullback_point(omega, omega, 1.0, 0.4, identity(3))
    assert_allclose(p, np.exp(-0.4) * omega)


def test_pullback_at_zero_time_is_identity():
    omega = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert_allclose(pullback_point(omega, omega, 1.0, 0.0, anisotropic_demo(0.3)), omega)


def test_pullback_anisotropic_disk_is_radial():
    theta = np.linspace(0, 2 * np.pi, 7)
    omega = np.stack([np.cos(theta), np.sin(theta)], -1)
    p = pullback_point(omega, omega, 1.0, 0.5, anisotropic_demo(0.3))
    assert_allclose(p, np.exp(-0.5 * 1.3) * omega, atol=1e-15)


def test_pullback_general_form_on_disk_matches_ball_form():
    theta = np.linspace(0, 2 * np.pi, 5, endpoint=False)
    omega = np.stack([np.cos(theta), np.sin(theta)], -1)
    balls = [interior_ball(Circle(1.0), w) for w in omega]
    g = anisotropic_demo(0.2)
    assert_allclose(pullback_point(omega, omega, balls, 0.3, g), pullback_point(omega, omega, 1.0, 0.3, g),
                    atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(t=st.floats(0.0, 3.0), s=st.floats(0.05, 1.0), angle=st.floats(0, 2 * np.pi))
def test_pullback_stays_in_the_interior_ball(t, s, angle):
    omega = np.array([np.cos(angle), np.sin(angle)])
    ball = interior_ball(Circle(1.0), omega)
    p = pullback_point(omega, omega, [ball], t, anisotropic_demo(0.3), s)
    assert np.linalg.norm(p - ball.scaled_center(s)) <= s * ball.radius * (1 + 1e-12)


def test_pullback_rejects_negative_time():
    with pytest.raises(ValueError):
        pullback_point(np.array([1.0, 0.0]), np.array([1.0, 0.0]), 1.0, -0.1, identity(2))
