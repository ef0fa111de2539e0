"""Steady Laplacian transport towards a semipermeable membrane.

A concentration ``C0`` is held on an outer circle (or sphere) of radius
``R0``; particles diffuse with coefficient ``D`` and are absorbed at rate
``W`` on the membrane ``r = R``. The membrane problem reduces to
``(I + mu L) u = 1`` with ``mu = D / W`` and ``L`` the DtN operator of the
annulus grounded at ``R0``. The local flux is ``D C0 L u`` and the total
flux its integral over the membrane.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dtn_operator import DtNMatrix
from .errors import InvalidDomainError
from .geometry import Annulus, discretize_boundary
from .harmonic_lift import BoundaryFunction, annulus_radial
from .io import write_csv

__all__ = [
    "TransportParams",
    "annulus_dtn",
    "annulus_eigenvalue",
    "membrane_solve",
    "local_flux",
    "total_flux",
    "flux_sweep",
    "export_flux_sweep",
]


@dataclass(frozen=True)
class TransportParams:
    """Diffusion coefficient ``D``, source concentration ``C0`` and membrane rate ``W``."""

    D: float
    C0: float
    W: float

    def __post_init__(self):
        for name in ("D", "C0", "W"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    @property
    def mu(self):
        return self.D / self.W


def annulus_eigenvalue(k, annulus: Annulus):
    """``-d_r u_k`` at the membrane for the mode-``k`` radial profile with ``u_k(R) = 1``, ``u_k(R0) = 0``."""
    R, R0 = annulus.R_inner, annulus.R_outer
    return float(-annulus_radial(k, R, R, R0, annulus.dim)[1])


def annulus_dtn(annulus: Annulus, grid=None, resolution: int = 32) -> DtNMatrix:
    """Diagonal DtN matrix of the annulus, on the basis of the inner boundary.

    Mode ``k`` is multiplied by ``-d_r u_k(R)``. Constants are not in the
    kernel: the grounded outer boundary makes the operator positive definite.
    """
    if not isinstance(annulus, Annulus):
        raise InvalidDomainError("annulus_dtn needs an Annulus")
    if grid is None:
        grid = discretize_boundary(annulus.inner, resolution)
    inner = annulus.inner
    gd = grid.domain
    if type(gd) is not type(inner) or not np.isclose(gd.R, inner.R, rtol=1e-12):
        raise ValueError("grid must discretise the inner boundary of the annulus")
    degrees = grid.basis.degrees
    table = {int(k): annulus_eigenvalue(int(k), annulus) for k in np.unique(degrees)}
    entries = np.diag([table[int(k)] for k in degrees])
    entries.setflags(write=False)
    return DtNMatrix(grid, entries, 0.0, "identity", annulus, None, "spectral")


def _check_mu(mu):
    mu = float(mu)
    if not (np.isfinite(mu) and mu >= 0):
        raise ValueError(f"mu must be non-negative and finite, got {mu}")
    return mu


def membrane_solve(L: DtNMatrix, mu) -> BoundaryFunction:
    """Solve ``(I + mu L) u = 1`` on the membrane; ``u`` takes values in ``(0, 1]``."""
    mu = _check_mu(mu)
    grid = L.grid
    one = grid.constant_coeffs
    A = np.eye(L.size) + mu * np.asarray(L.entries)
    c = np.linalg.solve(A, one)
    u = BoundaryFunction(grid, c)
    vals = u.values
    assert np.all(vals > 0) and np.all(vals <= 1 + 1e-10), "membrane concentration left (0, 1]"
    return u


def local_flux(L: DtNMatrix, mu, D=1.0, C0=1.0) -> BoundaryFunction:
    """``phi = D C0 L (I + mu L)^{-1} 1``."""
    if not (D > 0 and C0 > 0):
        raise ValueError("D and C0 must be positive")
    u = membrane_solve(L, mu)
    return BoundaryFunction(L.grid, D * C0 * (np.asarray(L.entries) @ u.coeffs))


def total_flux(L: DtNMatrix, mu, D=1.0, C0=1.0) -> float:
    """``Phi = (phi, 1)`` over the membrane."""
    phi = local_flux(L, mu, D, C0)
    return float(phi.coeffs @ L.grid.constant_coeffs)


def flux_sweep(L: DtNMatrix, mu_list, D=1.0, C0=1.0):
    """Rows ``(mu, Phi, u_min, u_max)`` for each ``mu``."""
    rows = []
    for mu in mu_list:
        u = membrane_solve(L, mu).values
        rows.append((float(mu), total_flux(L, mu, D, C0), float(u.min()), float(u.max())))
    return rows


def export_flux_sweep(rows, path):
    return write_csv(path, ["mu", "Phi", "u_min", "u_max"], rows,
                     {"mu": "D / W", "Phi": "total flux through the membrane",
                      "u_min": "smallest membrane concentration (relative to C0)",
                      "u_max": "largest membrane concentration (relative to C0)"})
