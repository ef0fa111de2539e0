import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.integrate import trapezoid

from dtnlab import (
    Annulus,
    Circle,
    ConfigError,
    InvalidDomainError,
    NoInteriorBallError,
    ResolutionError,
    Sphere,
    StarShaped2D,
    discretize_boundary,
    interior_ball,
)
from dtnlab.geometry import domain_from_config, real_spherical_harmonics


def test_circle_grid_nodes_and_weights():
    g = discretize_boundary(Circle(1.0), 8)
    assert g.n_nodes == 8
    assert_allclose(g.nodes[0], [1.0, 0.0])
    assert_allclose(g.angles, 2 * np.pi * np.arange(8) / 8)
    assert_allclose(g.weights, 2 * np.pi / 8)


@pytest.mark.parametrize("R", [0.5, 1.0, 3.0])
def test_circle_grid_invariants(R):
    g = discretize_boundary(Circle(R), 33)
    assert_allclose(np.linalg.norm(g.normals, axis=1), 1.0, atol=1e-12)
    assert abs(g.weights.sum() - 2 * np.pi * R) <= 1e-10
    assert_allclose(g.gram, np.eye(g.dim), atol=1e-12)


@pytest.mark.parametrize("L", [4, 9])
def test_sphere_grid_invariants(L):
    g = discretize_boundary(Sphere(2.0), L)
    assert abs(g.weights.sum() - 4 * np.pi * 4.0) <= 1e-10
    assert_allclose(np.linalg.norm(g.normals, axis=1), 1.0, atol=1e-12)
    assert_allclose(g.gram, np.eye((L + 1) ** 2), atol=1e-12)


def test_sphere_quadrature_exact_to_degree_2L():
    L = 6
    g = discretize_boundary(Sphere(1.0), L)
    x, y, z = g.nodes.T
    # int z^(2L) dS = 4 pi / (2L + 1)
    assert abs(np.sum(g.weights * z ** (2 * L)) - 4 * np.pi / (2 * L + 1)) <= 1e-12
    assert abs(np.sum(g.weights * x**2 * y**2 * z ** (2 * L - 4))) > 0


def test_real_spherical_harmonics_low_degree():
    theta = np.array([0.3, 1.1, 2.5])
    phi = np.array([0.2, 4.0, 5.5])
    Y = real_spherical_harmonics(1, theta, phi)
    assert_allclose(Y[:, 0], 1 / np.sqrt(4 * np.pi))
    assert_allclose(Y[:, 2], np.sqrt(3 / (4 * np.pi)) * np.cos(theta))


def test_star_with_constant_radius_is_the_circle():
    star = StarShaped2D.from_coeffs([1.0])
    gs = discretize_boundary(star, 16)
    gc = discretize_boundary(Circle(1.0), 16)
    assert_allclose(gs.nodes, gc.nodes, atol=1e-15)
    assert_allclose(gs.weights, gc.weights)
    assert_allclose(gs.basis_matrix, gc.basis_matrix, atol=1e-14)


def test_star_grid_perimeter_and_orthonormality():
    star = StarShaped2D.from_coeffs([1.0, 0.0, 0.0, 0.1])
    g = discretize_boundary(star, 256)
    theta = np.linspace(0, 2 * np.pi, 20001)
    rho = 1 + 0.1 * np.cos(2 * theta)
    drho = -0.2 * np.sin(2 * theta)
    perimeter = trapezoid(np.hypot(rho, drho), theta)
    assert abs(g.weights.sum() - perimeter) <= 1e-8
    assert_allclose(g.gram, np.eye(g.dim), atol=1e-10)
    assert_allclose(np.linalg.norm(g.normals, axis=1), 1.0, atol=1e-12)


def test_star_spectral_derivative_matches_exact():
    exact = StarShaped2D.from_coeffs([1.0, 0.2, -0.1])
    numeric = StarShaped2D(exact.rho_fn)
    theta = np.linspace(0, 2 * np.pi, 50)
    assert_allclose(numeric.drho(theta), exact.drho(theta), atol=1e-12)
    assert abs(numeric.rho_mean - 1.0) < 1e-14


def test_invalid_domains():
    with pytest.raises(InvalidDomainError):
        Circle(0.0)
    with pytest.raises(InvalidDomainError):
        Annulus(2.0, 1.0)
    with pytest.raises(InvalidDomainError):
        StarShaped2D.from_coeffs([0.1, 0.5])
    with pytest.raises(ResolutionError):
        discretize_boundary(Circle(1.0), 3)


def test_annulus_discretises_its_membrane():
    g = discretize_boundary(Annulus(1.5, 3.0), 12)
    assert g.domain == Circle(1.5)


def test_interior_ball_of_disk_is_the_disk():
    b = interior_ball(Circle(2.0), np.array([0.0, 2.0]))
    assert b.radius == 2.0
    assert_allclose(b.center, [0.0, 0.0])
    assert_allclose(b.scaled_center(0.25), 0.25 * b.center + 0.75 * b.omega)


def test_interior_ball_on_ellipse_like_curve():
    star = StarShaped2D.from_coeffs([1.0, 0.0, 0.0, 0.2])
    omega = np.array([1.2, 0.0])
    b = interior_ball(star, omega)
    assert 0 < b.radius < 1.2
    theta = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
    pts = star.rho(theta)[:, None] * np.stack([np.cos(theta), np.sin(theta)], -1)
    assert np.min(np.linalg.norm(pts - b.center, axis=1)) >= b.radius - 1e-6
    assert_allclose(np.linalg.norm(b.center - omega), b.radius, rtol=1e-12)


def test_interior_ball_rejects_interior_points():
    with pytest.raises(NoInteriorBallError):
        interior_ball(Circle(1.0), np.array([0.5, 0.0]))


@settings(max_examples=30, deadline=None)
@given(s=st.floats(0.01, 1.0), angle=st.floats(0, 2 * np.pi))
def test_scaled_center_is_affine(s, angle):
    omega = np.array([np.cos(angle), np.sin(angle)])
    b = interior_ball(Circle(1.0), omega)
    assert_allclose(b.scaled_center(s), (1 - s) * omega, atol=1e-15)


def test_domain_from_config():
    assert domain_from_config({"kind": "circle", "R": 2}) == Circle(2.0)
    assert isinstance(domain_from_config({"kind": "star2d", "rho_coeffs": [1.0, 0.1]}), StarShaped2D)
    with pytest.raises(ConfigError, match="circl"):
        domain_from_config({"kind": "circl"})
    with pytest.raises(ConfigError, match="R=2.0, R_outer=1.0"):
        domain_from_config({"kind": "annulus", "R": 2.0, "R_outer": 1.0})
    with pytest.raises(ConfigError, match="radius"):
        domain_from_config({"kind": "circle", "radius": 1.0})
