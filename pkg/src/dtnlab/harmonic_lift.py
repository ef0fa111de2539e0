"""Boundary functions and gamma-harmonic liftings.

Two solver paths are available. For a constant scalar conductivity on a disk
or ball the lifting is written down mode by mode (``(r/R)^l`` radial law).
Everything else planar goes through the polar finite-difference solver in
:mod:`dtnlab._fd`. The annulus with a grounded outer circle has its own
closed-form path used by the transport module.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Optional

import numpy as np

from ._fd import PolarGridSolver
from .conductivity import ConductivityField, identity
from .errors import OutOfDomainError, ResolutionError, UnsupportedConfiguration
from .geometry import Annulus, BoundaryGrid, Circle, Domain, Sphere, StarShaped2D, _planar_grid

__all__ = [
    "BoundaryFunction",
    "HarmonicField",
    "SpectralField",
    "GridField",
    "AnnulusField",
    "lift",
    "lift_basis",
    "evaluate_interior",
    "trace",
    "lift_annulus",
    "fd_solver",
    "default_fd_factor",
    "annulus_radial",
]


@dataclass(frozen=True, eq=False)
class BoundaryFunction:
    """An element of L2 of the boundary, stored as basis coefficients on ``grid``."""

    grid: BoundaryGrid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (self.grid.dim,):
            raise ValueError(f"expected {self.grid.dim} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_values(cls, grid, values):
        """Project nodal values onto the basis."""
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n_nodes,):
            raise ValueError(f"expected {grid.n_nodes} nodal values, got shape {values.shape}")
        return cls(grid, grid.project(values))

    @classmethod
    def from_callable(cls, grid, fn):
        """Project ``fn(nodes)`` onto the basis."""
        return cls.from_values(grid, np.asarray(fn(grid.nodes), dtype=float))

    @classmethod
    def constant(cls, grid, value=1.0):
        return cls(grid, value * grid.constant_coeffs)

    @classmethod
    def basis_function(cls, grid, j):
        c = np.zeros(grid.dim)
        c[j] = 1.0
        return cls(grid, c)

    @cached_property
    def values(self):
        return self.grid.synthesize(self.coeffs)

    def at(self, angles):
        """Values at arbitrary boundary parameters (``theta`` or ``(theta, phi)``)."""
        return self.grid.basis.evaluate(np.asarray(angles, dtype=float)) @ self.coeffs

    def norm(self):
        return float(np.linalg.norm(self.coeffs))

    def nodal_norm(self):
        return float(np.sqrt(np.sum(self.grid.weights * self.values**2)))

    def inner(self, other):
        return float(self.coeffs @ other.coeffs)

    def sup(self):
        return float(np.max(np.abs(self.values)))

    def _same_grid(self, other):
        if other.grid is not self.grid:
            raise ValueError("boundary functions live on different grids")

    def __add__(self, other):
        self._same_grid(other)
        return BoundaryFunction(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._same_grid(other)
        return BoundaryFunction(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return BoundaryFunction(self.grid, float(scalar) * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self):
        return BoundaryFunction(self.grid, -self.coeffs)


# ----------------------------------------------------------------------------
# harmonic fields


class HarmonicField:
    """A gamma-harmonic function on ``domain`` with trace ``boundary_data``."""

    representation = ""

    def __init__(self, domain: Domain, gamma: Optional[ConductivityField], boundary_data: BoundaryFunction):
        self.domain = domain
        self.gamma = gamma
        self.boundary_data = boundary_data

    @property
    def grid(self):
        return self.boundary_data.grid

    def _check_points(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[-1] != self.domain.dim:
            raise ValueError(f"points must have {self.domain.dim} coordinates")
        if not np.all(self.domain.contains(pts, strict=False)):
            raise OutOfDomainError("evaluation point outside the closed domain")
        return pts

    def evaluate(self, points):
        raise NotImplementedError

    def trace(self) -> BoundaryFunction:
        raise NotImplementedError

    def conormal_derivative(self) -> BoundaryFunction:
        raise NotImplementedError

    def energy(self) -> float:
        raise NotImplementedError

    def residual(self) -> float:
        return 0.0


def _planar_angles(points):
    return np.mod(np.arctan2(points[:, 1], points[:, 0]), 2 * np.pi)


def _sphere_angles(points):
    r = np.linalg.norm(points, axis=-1)
    safe = np.where(r > 0, r, 1.0)
    theta = np.arccos(np.clip(points[:, 2] / safe, -1.0, 1.0))
    phi = np.mod(np.arctan2(points[:, 1], points[:, 0]), 2 * np.pi)
    return np.stack([theta, phi], axis=-1)


class SpectralField(HarmonicField):
    """Closed-form lifting ``sum_j c_j (r/R)^{l_j} e_j`` on a disk or ball, gamma = a I."""

    representation = "spectral"

    @property
    def scalar(self):
        return self.gamma.constant_scalar if self.gamma is not None else 1.0

    def evaluate(self, points):
        pts = self._check_points(points)
        R = self.domain.R
        r = np.linalg.norm(pts, axis=-1) / R
        basis = self.grid.basis
        if isinstance(self.domain, Sphere):
            E = basis.evaluate(_sphere_angles(pts))
        else:
            E = basis.evaluate(_planar_angles(pts))
        radial = np.power.outer(r, basis.degrees.astype(float))
        return (E * radial) @ self.boundary_data.coeffs

    def trace(self):
        return self.boundary_data

    def normal_derivative_values(self):
        """``d_r v`` at the grid nodes, from the radial law."""
        deg = self.grid.basis.degrees
        return self.grid.synthesize(deg / self.domain.R * self.boundary_data.coeffs)

    def conormal_derivative(self):
        return BoundaryFunction.from_values(self.grid, self.scalar * self.normal_derivative_values())

    def energy(self, n_r=None, n_theta=None):
        """Dirichlet energy by Gauss-Legendre (radius) x trapezoid (angle) quadrature."""
        if not isinstance(self.domain, Circle):
            raise UnsupportedConfiguration("spectral energy quadrature is implemented for the disk only")
        basis = self.grid.basis
        K = basis.K
        R = self.domain.R
        n_r = n_r or K + 4
        n_theta = n_theta or 4 * K + 8
        x, w = np.polynomial.legendre.leggauss(n_r)
        r = 0.5 * R * (x + 1.0)
        wr = 0.5 * R * w
        theta = 2 * np.pi * np.arange(n_theta) / n_theta
        c = self.boundary_data.coeffs
        k = basis.degrees.astype(float)
        T = basis.trig(theta) / np.sqrt(R)
        dT = np.zeros_like(T)
        kk = np.arange(1, K + 1)
        kt = np.multiply.outer(theta, kk)
        dT[:, 1::2] = -kk * np.sin(kt) / np.sqrt(np.pi * R)
        dT[:, 2::2] = kk * np.cos(kt) / np.sqrt(np.pi * R)
        rr = (r / R)[:, None]
        # d_r (r/R)^k and (1/r) (r/R)^k, both written without dividing by r = 0
        dr_law = np.where(k > 0, k / R * rr ** np.maximum(k - 1, 0), 0.0)
        dv_r = dr_law @ (T * c).T
        dv_t = dr_law / np.where(k > 0, k, 1.0) @ (dT * c).T
        integrand = (dv_r**2 + dv_t**2) * r[:, None]
        return float(self.scalar * (wr @ integrand.sum(axis=1)) * (2 * np.pi / n_theta))


class GridField(HarmonicField):
    """Finite-difference lifting on the mapped polar grid of a :class:`PolarGridSolver`."""

    representation = "grid"

    def __init__(self, domain, gamma, boundary_data, solver, data, fine_grid, coarse=None):
        super().__init__(domain, gamma, boundary_data)
        self.solver = solver
        self.data = data
        self.fine_grid = fine_grid
        # (solver, data, fine_grid) on the half-resolution grid, for Richardson extrapolation
        self.coarse = coarse

    @cached_property
    def _spline(self):
        return self.solver.interpolator(self.data)

    def evaluate(self, points):
        pts = self._check_points(points)
        s, theta = self.solver.to_computational(pts)
        return self._spline(s, theta)

    def evaluate_computational(self, s, theta):
        return self._spline(s, theta)

    def trace(self):
        return BoundaryFunction(self.grid, self.fine_grid.project(self.data[-1]))

    def conormal_values(self):
        """``nu . gamma grad v`` at the solver's boundary nodes."""
        return self.solver.conormal(self.data)

    def conormal_derivative(self):
        c = self.fine_grid.project(self.conormal_values())
        if self.coarse is not None:
            solver, data, fine = self.coarse
            c = (4.0 * c - fine.project(solver.conormal(data))) / 3.0
        return BoundaryFunction(self.grid, c)

    def energy(self):
        e = float(self.solver.energy(self.data))
        if self.coarse is not None:
            solver, data, _ = self.coarse
            e = (4.0 * e - float(solver.energy(data))) / 3.0
        return e

    def residual(self):
        return self.solver.residual(self.data)


def annulus_radial(k, r, R, R0, dim=2):
    """Radial profile of mode ``k`` harmonic in ``R < r < R0`` with value 1 at ``R`` and 0 at ``R0``.

    Also returns its derivative. Planar modes use ``ln r`` (k = 0) or
    ``r^k, r^-k``; the shell uses ``r^l, r^-(l+1)``.
    """
    r = np.asarray(r, dtype=float)
    if dim == 2 and k == 0:
        den = np.log(R / R0)
        return np.log(r / R0) / den, 1.0 / (r * den)
    if dim == 2:
        p, q = k, -k
    else:
        p, q = k, -(k + 1)
    # u = A r^p + B r^q in scaled form to avoid overflow for large k
    x = r / R
    rho = R0 / R
    det = rho**q - rho**p
    A = rho**q / det
    B = -(rho**p) / det
    u = A * x**p + B * x**q
    du = (A * p * x ** (p - 1) + B * q * x ** (q - 1)) / R
    return u, du


class AnnulusField(HarmonicField):
    """Harmonic function in the annulus (or spherical shell) vanishing on the outer boundary."""

    representation = "spectral"

    def evaluate(self, points):
        pts = self._check_points(points)
        ann = self.domain
        r = np.linalg.norm(pts, axis=-1)
        basis = self.grid.basis
        if ann.dim == 3:
            E = basis.evaluate(_sphere_angles(pts))
        else:
            E = basis.evaluate(_planar_angles(pts))
        prof = np.stack([annulus_radial(k, r, ann.R_inner, ann.R_outer, ann.dim)[0] for k in basis.degrees], -1)
        return (E * prof) @ self.boundary_data.coeffs

    def trace(self):
        return self.boundary_data

    def inward_flux_coefficients(self):
        """``-d_r u`` at the membrane, per basis mode."""
        ann = self.domain
        d = np.array(
            [-annulus_radial(k, ann.R_inner, ann.R_inner, ann.R_outer, ann.dim)[1] for k in self.grid.basis.degrees]
        )
        return d * self.boundary_data.coeffs

    def conormal_derivative(self):
        return BoundaryFunction(self.grid, self.inward_flux_coefficients())


# ----------------------------------------------------------------------------
# solver plumbing


def default_fd_factor(domain):
    """FD grid points per boundary node: 4 on disks, 8 on star-shaped curves."""
    return 8 if isinstance(domain, StarShaped2D) else 4


@lru_cache(maxsize=8)
def _cached_solver(domain, gamma, n_s, n_theta):
    return PolarGridSolver(domain, gamma, n_s, n_theta)


def fd_solver(domain, gamma, resolution, factor=None):
    """Cached finite-difference solver with ``factor * resolution`` points per direction."""
    factor = factor or default_fd_factor(domain)
    n = int(factor * resolution)
    n += n % 2
    return _cached_solver(domain, gamma, n, n)


def _backend(domain, gamma, backend):
    if backend not in ("auto", "spectral", "fd"):
        raise ValueError(f"unknown backend {backend!r}")
    scalar = gamma is None or gamma.constant_scalar is not None
    if isinstance(domain, Sphere):
        if not scalar:
            raise UnsupportedConfiguration("variable conductivity on the ball is out of scope; use gamma = a I")
        if backend == "fd":
            raise UnsupportedConfiguration("no finite-difference path in 3D")
        return "spectral"
    if isinstance(domain, Circle):
        if backend == "spectral" and not scalar:
            raise UnsupportedConfiguration("the spectral path needs a constant scalar conductivity")
        if backend == "auto":
            return "spectral" if scalar else "fd"
        return backend
    if isinstance(domain, StarShaped2D):
        if backend == "spectral":
            raise UnsupportedConfiguration("no closed-form lifting on star-shaped domains")
        return "fd"
    raise UnsupportedConfiguration(f"cannot lift on {type(domain).__name__}")


def _check_grid(f, domain):
    gd = f.grid.domain
    if gd is domain or gd == domain:
        return
    raise ValueError("boundary function grid does not belong to the given domain")


def lift_basis(grid, domain, gamma, coeffs=None, *, backend="auto", fd_factor=None, richardson=False):
    """Liftings of several boundary functions at once (default: every basis function).

    ``coeffs`` has one column per function. The finite-difference path shares
    one factorisation and one multi-right-hand-side solve. With
    ``richardson=True`` it also solves on a grid of half the size and
    extrapolates conormal derivatives and energies as ``(4 fine - coarse) / 3``,
    which cancels the leading ``h^2`` error term.
    """
    C = np.eye(grid.dim) if coeffs is None else np.asarray(coeffs, dtype=float)
    if C.ndim == 1:
        C = C[:, None]
    path = _backend(domain, gamma, backend)
    funcs = [BoundaryFunction(grid, C[:, j]) for j in range(C.shape[1])]
    if path == "spectral":
        return [SpectralField(domain, gamma, f) for f in funcs]
    factor = fd_factor or default_fd_factor(domain)
    gamma = identity(domain.dim) if gamma is None else gamma
    solver = fd_solver(domain, gamma, grid.resolution, factor)
    fine = _planar_grid(grid.domain, solver.n_theta, grid.basis)
    data = solver.solve(fine.basis_matrix @ C)
    coarse = [None] * C.shape[1]
    if richardson:
        if solver.n_theta % 4:
            raise ResolutionError(f"Richardson extrapolation needs a grid size divisible by 4, got {solver.n_theta}")
        half = solver.n_theta // 2
        solver_c = _cached_solver(domain, gamma, half, half)
        fine_c = _planar_grid(grid.domain, half, grid.basis)
        data_c = solver_c.solve(fine_c.basis_matrix @ C)
        coarse = [(solver_c, data_c[..., j], fine_c) for j in range(C.shape[1])]
    return [GridField(domain, gamma, funcs[j], solver, data[..., j], fine, coarse[j]) for j in range(C.shape[1])]


def lift(f: BoundaryFunction, domain: Domain, gamma: Optional[ConductivityField] = None, *, backend="auto",
         fd_factor=None, richardson=False) -> HarmonicField:
    """gamma-harmonic lifting of ``f`` into ``domain``.

    ``gamma=None`` means the identity. Annuli are delegated to
    :func:`lift_annulus`.
    """
    if isinstance(domain, Annulus):
        if gamma is not None and not gamma.is_identity:
            raise UnsupportedConfiguration("the annular problem is isotropic (gamma = I)")
        return lift_annulus(f, domain)
    _check_grid(f, domain)
    return lift_basis(f.grid, domain, gamma, f.coeffs, backend=backend, fd_factor=fd_factor,
                      richardson=richardson)[0]


def evaluate_interior(v: HarmonicField, points):
    """Values of ``v`` at points of the closed domain."""
    return v.evaluate(points)


def trace(v: HarmonicField) -> BoundaryFunction:
    """Restriction of ``v`` to the boundary."""
    return v.trace()


def lift_annulus(f: BoundaryFunction, annulus: Annulus) -> AnnulusField:
    """Harmonic extension of ``f`` from ``r = R_inner`` vanishing at ``r = R_outer``."""
    if not isinstance(annulus, Annulus):
        raise TypeError("lift_annulus needs an Annulus")
    gd = f.grid.domain
    inner = annulus.inner
    if type(gd) is not type(inner) or not np.isclose(gd.R, inner.R, rtol=1e-12):
        raise ValueError("boundary function must live on the inner boundary of the annulus")
    return AnnulusField(annulus, None, f)

