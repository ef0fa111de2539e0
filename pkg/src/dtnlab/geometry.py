"""Model domains, boundary grids with orthonormal bases, and interior balls.

Circles and star-shaped curves are sampled at equispaced angles with
trapezoidal weights; spheres use a Gauss-Legendre x equispaced-azimuth
product rule that integrates products of harmonics up to degree 2L exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special

from .errors import InvalidDomainError, NoInteriorBallError, ResolutionError

__all__ = [
    "Domain",
    "Circle",
    "Sphere",
    "StarShaped2D",
    "Annulus",
    "FourierBasis",
    "SphericalHarmonicBasis",
    "BoundaryGrid",
    "InteriorBall",
    "discretize_boundary",
    "interior_ball",
    "domain_from_config",
    "real_spherical_harmonics",
]

TWO_PI = 2.0 * np.pi


def _check_length(name, value):
    if not np.isfinite(value) or value <= 0:
        raise InvalidDomainError(f"{name} must be a positive length, got {value!r}")


class Domain:
    """Marker base class for the supported domain variants."""

    dim: int = 2
    kind: str = ""

    def contains(self, points, *, strict=True):
        raise NotImplementedError


@dataclass(frozen=True)
class Circle(Domain):
    """The disk of radius ``R`` centred at the origin."""

    R: float = 1.0
    kind = "circle"

    def __post_init__(self):
        _check_length("R", self.R)

    def contains(self, points, *, strict=True):
        r = np.linalg.norm(np.atleast_2d(points), axis=-1)
        return r < self.R if strict else r <= self.R * (1 + 1e-12)

    def rho(self, theta):
        return np.full_like(np.asarray(theta, dtype=float), self.R)

    def drho(self, theta):
        return np.zeros_like(np.asarray(theta, dtype=float))

    @property
    def rho_mean(self):
        return self.R


@dataclass(frozen=True)
class Sphere(Domain):
    """The ball of radius ``R`` in R^3 centred at the origin."""

    R: float = 1.0
    kind = "sphere"
    dim = 3

    def __post_init__(self):
        _check_length("R", self.R)

    def contains(self, points, *, strict=True):
        r = np.linalg.norm(np.atleast_2d(points), axis=-1)
        return r < self.R if strict else r <= self.R * (1 + 1e-12)


@dataclass(frozen=True, eq=False)
class StarShaped2D(Domain):
    """Planar region ``{r < rho(theta)}``.

    ``rho`` must be vectorised, 2*pi-periodic and strictly positive. When
    ``drho`` is omitted the derivative is obtained by spectral
    differentiation of ``rho`` sampled at ``n_spectral`` angles.
    """

    rho_fn: Callable[[np.ndarray], np.ndarray]
    drho_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    coeffs: Optional[tuple] = None
    n_spectral: int = 1024
    kind = "star2d"

    def __post_init__(self):
        theta = np.linspace(0.0, TWO_PI, 512, endpoint=False)
        values = np.asarray(self.rho_fn(theta), dtype=float)
        if values.shape != theta.shape:
            raise InvalidDomainError("rho must be vectorised over theta")
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise InvalidDomainError("rho(theta) must be strictly positive at every sample")
        jump = abs(float(self.rho_fn(np.array([TWO_PI]))[0]) - values[0])
        if jump > 1e-10 * values.max():
            raise InvalidDomainError("rho(theta) is not 2*pi-periodic")

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[float]):
        """Build from ``[a0, a1, b1, a2, b2, ...]`` with
        ``rho = a0 + sum_k a_k cos(k theta) + b_k sin(k theta)``."""
        c = np.asarray(coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise InvalidDomainError("rho_coeffs must be a non-empty list")
        a0 = c[0]
        rest = np.concatenate([c[1:], np.zeros(len(c[1:]) % 2)])
        a = rest[0::2]
        b = rest[1::2]
        k = np.arange(1, len(a) + 1)

        def rho(theta):
            th = np.asarray(theta, dtype=float)
            kt = np.multiply.outer(th, k)
            return a0 + np.cos(kt) @ a + np.sin(kt) @ b

        def drho(theta):
            th = np.asarray(theta, dtype=float)
            kt = np.multiply.outer(th, k)
            return np.sin(kt) @ (-k * a) + np.cos(kt) @ (k * b)

        return cls(rho, drho, tuple(float(x) for x in c))

    def rho(self, theta):
        return np.asarray(self.rho_fn(np.asarray(theta, dtype=float)), dtype=float)

    @cached_property
    def _rho_fft(self):
        theta = TWO_PI * np.arange(self.n_spectral) / self.n_spectral
        return np.fft.rfft(self.rho(theta)) / self.n_spectral

    def drho(self, theta):
        if self.drho_fn is not None:
            return np.asarray(self.drho_fn(np.asarray(theta, dtype=float)), dtype=float)
        c = self._rho_fft
        n = self.n_spectral
        k = np.arange(c.size)
        weight = np.where((k == 0) | ((n % 2 == 0) & (k == n // 2)), 1.0, 2.0)
        # Nyquist term carries no derivative information
        if n % 2 == 0:
            weight[-1] = 0.0
        phase = np.exp(1j * np.multiply.outer(np.asarray(theta, dtype=float), k))
        return np.real(phase @ (weight * 1j * k * c))

    @cached_property
    def rho_mean(self):
        return float(np.real(self._rho_fft[0]))

    def contains(self, points, *, strict=True):
        p = np.atleast_2d(points)
        r = np.linalg.norm(p, axis=-1)
        bound = self.rho(np.arctan2(p[:, 1], p[:, 0]))
        return r < bound if strict else r <= bound * (1 + 1e-12)


@dataclass(frozen=True)
class Annulus(Domain):
    """Region between the membrane ``r = R_inner`` and the source ``r = R_outer``.

    ``dim=3`` selects the spherical shell.
    """

    R_inner: float = 1.0
    R_outer: float = 2.0
    dim: int = 2
    kind = "annulus"

    def __post_init__(self):
        _check_length("R_inner", self.R_inner)
        _check_length("R_outer", self.R_outer)
        if not self.R_inner < self.R_outer:
            raise InvalidDomainError(
                f"annulus requires R_inner < R_outer, got R_inner={self.R_inner}, R_outer={self.R_outer}"
            )
        if self.dim not in (2, 3):
            raise InvalidDomainError(f"annulus dimension must be 2 or 3, got {self.dim}")

    @property
    def inner(self):
        return Circle(self.R_inner) if self.dim == 2 else Sphere(self.R_inner)

    def contains(self, points, *, strict=True):
        r = np.linalg.norm(np.atleast_2d(points), axis=-1)
        if strict:
            return (r > self.R_inner) & (r < self.R_outer)
        return (r >= self.R_inner * (1 - 1e-12)) & (r <= self.R_outer * (1 + 1e-12))


# ----------------------------------------------------------------------------
# boundary bases


@dataclass(frozen=True, eq=False)
class FourierBasis:
    """Fourier modes ``|k| <= K`` orthonormal in L2 of a closed planar curve.

    Column order is ``1, cos(theta), sin(theta), cos(2 theta), ...``. Each mode
    is divided by ``sqrt(density)``, the arc-length density ``ds/dtheta``, so
    the family stays orthonormal for the surface measure on non-circular curves.
    """

    K: int
    density: Callable[[np.ndarray], np.ndarray]

    @property
    def dim(self):
        return 2 * self.K + 1

    @cached_property
    def degrees(self):
        k = np.arange(1, self.K + 1)
        return np.concatenate([[0], np.repeat(k, 2)])

    @cached_property
    def labels(self):
        out = [("cos", 0)]
        for k in range(1, self.K + 1):
            out += [("cos", k), ("sin", k)]
        return out

    def trig(self, theta):
        """Modes orthonormal in ``dtheta`` (no density factor)."""
        theta = np.asarray(theta, dtype=float)
        k = np.arange(1, self.K + 1)
        kt = np.multiply.outer(theta, k)
        out = np.empty(theta.shape + (self.dim,))
        out[..., 0] = 1.0 / np.sqrt(TWO_PI)
        out[..., 1::2] = np.cos(kt) / np.sqrt(np.pi)
        out[..., 2::2] = np.sin(kt) / np.sqrt(np.pi)
        return out

    def evaluate(self, theta):
        theta = np.asarray(theta, dtype=float)
        scale = 1.0 / np.sqrt(np.asarray(self.density(theta), dtype=float))
        return self.trig(theta) * scale[..., None]


def real_spherical_harmonics(L, theta, phi):
    """Real orthonormal spherical harmonics on the unit sphere.

    Returns an array of shape ``theta.shape + ((L+1)**2,)`` ordered by
    ``l`` then ``m = -l..l``; ``theta`` is the polar angle.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    out = np.empty(theta.shape + ((L + 1) ** 2,))
    col = 0
    for l in range(L + 1):
        m = np.arange(0, l + 1)
        y = special.sph_harm_y(l, m[:, None], theta.ravel()[None, :], phi.ravel()[None, :])
        y = y.reshape((l + 1,) + theta.shape)
        sign = (-1.0) ** m
        for mm in range(-l, l + 1):
            if mm < 0:
                val = np.sqrt(2.0) * sign[-mm] * y[-mm].imag
            elif mm == 0:
                val = y[0].real
            else:
                val = np.sqrt(2.0) * sign[mm] * y[mm].real
            out[..., col] = val
            col += 1
    return out


@dataclass(frozen=True, eq=False)
class SphericalHarmonicBasis:
    """Real spherical harmonics up to degree ``L``, normalised on the sphere of radius ``R``."""

    L: int
    R: float = 1.0

    @property
    def dim(self):
        return (self.L + 1) ** 2

    @cached_property
    def degrees(self):
        return np.concatenate([np.full(2 * l + 1, l) for l in range(self.L + 1)])

    @cached_property
    def orders(self):
        return np.concatenate([np.arange(-l, l + 1) for l in range(self.L + 1)])

    @cached_property
    def labels(self):
        return list(zip(self.degrees.tolist(), self.orders.tolist()))

    def evaluate(self, angles):
        angles = np.asarray(angles, dtype=float)
        return real_spherical_harmonics(self.L, angles[..., 0], angles[..., 1]) / self.R


# ----------------------------------------------------------------------------
# grids


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BoundaryGrid:
    """Quadrature nodes on the boundary together with an orthonormal basis.

    ``angles`` holds the parametrisation of each node: ``theta`` for planar
    curves, ``(theta, phi)`` for spheres.
    """

    domain: Domain
    resolution: int
    nodes: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    angles: np.ndarray
    basis: object

    def __repr__(self):
        return f"BoundaryGrid(domain={self.domain!r}, resolution={self.resolution}, n_nodes={self.n_nodes})"

    @property
    def n_nodes(self):
        return self.weights.size

    @property
    def dim(self):
        """Dimension of the boundary basis."""
        return self.basis.dim

    @cached_property
    def basis_matrix(self):
        return _frozen(self.basis.evaluate(self.angles))

    def project(self, values):
        """Basis coefficients of nodal values (columns are projected independently)."""
        values = np.asarray(values)
        w = self.weights.reshape((-1,) + (1,) * (values.ndim - 1))
        return self.basis_matrix.T @ (w * values)

    def synthesize(self, coeffs):
        return self.basis_matrix @ np.asarray(coeffs)

    def inner(self, a, b):
        """Discrete L2 inner product of nodal values."""
        return np.sum(self.weights * np.asarray(a) * np.conj(np.asarray(b)))

    @cached_property
    def gram(self):
        B = self.basis_matrix
        return B.T @ (self.weights[:, None] * B)

    @cached_property
    def constant_coeffs(self):
        """Coefficients of the constant function 1."""
        return self.project(np.ones(self.n_nodes))

    def oversampled(self, factor):
        """Same basis, ``factor`` times more nodes (planar curves only)."""
        if isinstance(self.domain, Sphere):
            raise ResolutionError("oversampling is only defined for planar boundaries")
        return _planar_grid(self.domain, self.resolution * factor, self.basis)


def _planar_grid(domain, n, basis):
    theta = TWO_PI * np.arange(n) / n
    rho = domain.rho(theta)
    drho = domain.drho(theta)
    if np.any(rho <= 0):
        raise InvalidDomainError("rho(theta) <= 0 at a boundary sample")
    er = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    ep = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
    sigma = np.hypot(rho, drho)
    nodes = rho[:, None] * er
    normals = (rho[:, None] * er - drho[:, None] * ep) / sigma[:, None]
    normals /= np.linalg.norm(normals, axis=-1, keepdims=True)
    weights = sigma * TWO_PI / n
    return BoundaryGrid(domain, n, _frozen(nodes), _frozen(normals), _frozen(weights), _frozen(theta), basis)


def _arc_density(domain):
    if isinstance(domain, Circle):
        R = domain.R
        return lambda theta: np.full_like(np.asarray(theta, dtype=float), R)
    return lambda theta: np.hypot(domain.rho(theta), domain.drho(theta))


def discretize_boundary(domain: Domain, resolution: int) -> BoundaryGrid:
    """Quadrature grid and orthonormal basis on the boundary of ``domain``.

    For planar domains ``resolution`` is the number of equispaced nodes and
    the basis holds the Fourier modes ``|k| <= (resolution - 1) // 2``. For a
    sphere it is the maximal harmonic degree ``L``; the grid has
    ``(L+1) x (2L+1)`` nodes. An :class:`Annulus` is discretised on its inner
    boundary (the membrane).
    """
    if int(resolution) != resolution or resolution < 4:
        raise ResolutionError(f"resolution must be an integer >= 4, got {resolution!r}")
    resolution = int(resolution)
    if isinstance(domain, Annulus):
        return discretize_boundary(domain.inner, resolution)
    if isinstance(domain, Sphere):
        L = resolution
        x, w = np.polynomial.legendre.leggauss(L + 1)
        theta = np.arccos(x)[::-1]
        w = w[::-1]
        nphi = 2 * L + 1
        phi = TWO_PI * np.arange(nphi) / nphi
        TH, PH = np.meshgrid(theta, phi, indexing="ij")
        W = np.repeat(w, nphi).reshape(TH.shape) * (TWO_PI / nphi) * domain.R**2
        normals = np.stack([np.sin(TH) * np.cos(PH), np.sin(TH) * np.sin(PH), np.cos(TH)], axis=-1).reshape(-1, 3)
        angles = np.stack([TH.ravel(), PH.ravel()], axis=-1)
        basis = SphericalHarmonicBasis(L, domain.R)
        return BoundaryGrid(
            domain, L, _frozen(domain.R * normals), _frozen(normals), _frozen(W.ravel()), _frozen(angles), basis
        )
    if isinstance(domain, (Circle, StarShaped2D)):
        basis = FourierBasis((resolution - 1) // 2, _arc_density(domain))
        return _planar_grid(domain, resolution, basis)
    raise InvalidDomainError(f"unsupported domain {domain!r}")


# ----------------------------------------------------------------------------
# interior balls


@dataclass(frozen=True)
class InteriorBall:
    """Largest ball inside the domain tangent to the boundary at ``omega``."""

    omega: np.ndarray
    center: np.ndarray
    radius: float
    normal: np.ndarray = field(repr=False)

    def scaled_center(self, s):
        """``s * center + (1 - s) * omega``."""
        return s * self.center + (1.0 - s) * self.omega


def _on_boundary(domain, omega):
    if isinstance(domain, (Circle, Sphere)):
        r = np.linalg.norm(omega)
        return abs(r - domain.R) <= 1e-10 * domain.R
    theta = np.arctan2(omega[1], omega[0])
    rho = float(domain.rho(np.array([theta]))[0])
    return abs(np.linalg.norm(omega) - rho) <= 1e-10 * rho


def interior_ball(domain: Domain, omega, *, samples: int = 16384, tol: float = 1e-8) -> InteriorBall:
    """Largest inscribed ball tangent to the boundary at ``omega``.

    For disks and balls this is the domain itself. For star-shaped regions
    the radius is found by bisection on a containment predicate evaluated
    against ``samples`` boundary points.
    """
    omega = np.asarray(omega, dtype=float)
    if not isinstance(domain, (Circle, Sphere, StarShaped2D)):
        raise NoInteriorBallError(f"interior balls are not available for {type(domain).__name__}")
    if omega.shape != (domain.dim,) or not _on_boundary(domain, omega):
        raise NoInteriorBallError(f"point {omega} is not on the boundary")
    if isinstance(domain, (Circle, Sphere)):
        nu = omega / np.linalg.norm(omega)
        return InteriorBall(omega, np.zeros(domain.dim), float(domain.R), nu)

    theta0 = np.arctan2(omega[1], omega[0])
    rho0 = float(domain.rho(np.array([theta0]))[0])
    drho0 = float(domain.drho(np.array([theta0]))[0])
    er = np.array([np.cos(theta0), np.sin(theta0)])
    ep = np.array([-np.sin(theta0), np.cos(theta0)])
    nu = rho0 * er - drho0 * ep
    nu /= np.linalg.norm(nu)

    theta = TWO_PI * np.arange(samples) / samples
    boundary = domain.rho(theta)[:, None] * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    scale = float(np.max(np.linalg.norm(boundary, axis=-1)))

    def fits(r):
        c = omega - r * nu
        if not domain.contains(c[None, :])[0]:
            return False
        d = np.min(np.linalg.norm(boundary - c, axis=-1))
        return d >= r - 1e-12 * scale

    lo, hi = 0.0, scale
    if not fits(tol):
        raise NoInteriorBallError(f"no tangent ball fits at {omega}")
    lo = tol
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fits(mid):
            lo = mid
        else:
            hi = mid
    return InteriorBall(omega, omega - lo * nu, float(lo), nu)


# ----------------------------------------------------------------------------
# config


_DOMAIN_KEYS = {
    "circle": {"kind", "R"},
    "sphere": {"kind", "R"},
    "star2d": {"kind", "rho_coeffs"},
    "annulus": {"kind", "R", "R_outer", "shell"},
}


def domain_from_config(block: dict) -> Domain:
    """Construct a domain from ``{kind: circle|sphere|star2d|annulus, ...}``."""
    from .errors import ConfigError

    if not isinstance(block, dict) or "kind" not in block:
        raise ConfigError("domain block needs a 'kind'", key="domain.kind")
    kind = block["kind"]
    if kind not in _DOMAIN_KEYS:
        raise ConfigError(
            f"unknown domain kind {kind!r} (expected one of {sorted(_DOMAIN_KEYS)})", key="domain.kind"
        )
    unknown = set(block) - _DOMAIN_KEYS[kind]
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} for domain kind {kind!r}", key="domain")
    try:
        if kind == "circle":
            return Circle(float(block.get("R", 1.0)))
        if kind == "sphere":
            return Sphere(float(block.get("R", 1.0)))
        if kind == "star2d":
            if "rho_coeffs" not in block:
                raise ConfigError("star2d requires rho_coeffs", key="domain.rho_coeffs")
            return StarShaped2D.from_coeffs(block["rho_coeffs"])
        R = float(block.get("R", 1.0))
        R0 = float(block.get("R_outer", 2.0))
        if not R < R0:
            raise ConfigError(f"annulus requires R < R_outer, got R={R}, R_outer={R0}", key="domain.R_outer")
        return Annulus(R, R0, 3 if block.get("shell", False) else 2)
    except InvalidDomainError as exc:
        raise ConfigError(str(exc), key="domain") from exc
