"""Discretised Dirichlet-to-Neumann operators and their spectra."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .conductivity import ConductivityField
from .errors import AssemblyInconsistency, UnsupportedConfiguration
from .geometry import Annulus, BoundaryGrid, Circle, Sphere, discretize_boundary
from .harmonic_lift import BoundaryFunction, lift_basis
from .io import write_csv, write_json

__all__ = [
    "DtNMatrix",
    "DtNSpectrum",
    "WeylFit",
    "assemble_dtn",
    "spectrum",
    "weyl_fit",
    "localization_profile",
    "multiplicity_groups",
    "export_spectrum",
    "export_matrix",
]

log = logging.getLogger(__name__)

PSD_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class DtNMatrix:
    """Symmetrised DtN matrix in the orthonormal boundary basis of ``grid``.

    ``asymmetry`` is ``||L - L^T||_2 / ||L||_2`` of the raw matrix before
    symmetrisation.
    """

    grid: BoundaryGrid
    entries: np.ndarray
    asymmetry: float
    gamma_tag: str
    domain: object = None
    gamma: Optional[ConductivityField] = field(default=None, repr=False)
    backend: str = "spectral"
    fd_factor: Optional[int] = None

    @property
    def size(self):
        return self.entries.shape[0]

    @cached_property
    def norm(self):
        return float(np.linalg.norm(self.entries, 2))

    def apply(self, f: BoundaryFunction) -> BoundaryFunction:
        return BoundaryFunction(self.grid, self.entries @ f.coeffs)


@dataclass(frozen=True, eq=False)
class DtNSpectrum:
    """Ascending eigenvalues and orthonormal eigenvectors (basis coefficients, one per column)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    matrix_ref: DtNMatrix

    @property
    def grid(self):
        return self.matrix_ref.grid

    def __len__(self):
        return self.eigenvalues.size

    def eigenfunction(self, k):
        """The ``k``-th eigenfunction, 1-based."""
        return BoundaryFunction(self.grid, self.eigenvectors[:, k - 1])

    @property
    def eigenfunctions(self):
        return [self.eigenfunction(k) for k in range(1, len(self) + 1)]


def _gamma_tag(gamma):
    return "identity" if gamma is None else gamma.tag


def assemble_dtn(domain, gamma: Optional[ConductivityField] = None, grid: Optional[BoundaryGrid] = None, *,
                 resolution: Optional[int] = None, backend="auto", fd_factor=None, richardson=False,
                 check=True) -> DtNMatrix:
    """Assemble the DtN matrix column by column, one lifting per basis function.

    Column ``j`` holds the basis coefficients of ``nu . gamma grad v_j`` on
    the boundary, ``v_j`` being the lifting of the ``j``-th basis function.
    The result is stored symmetrised; the relative asymmetry is recorded and
    must stay below 1e-2. ``richardson`` is passed on to
    :func:`~dtnlab.harmonic_lift.lift_basis`.

    Constants are gamma-harmonic with zero flux, so the raw matrix must
    annihilate them (checked to ``1e-6 ||L||``). The symmetric part is then
    compressed to the complement of the constants, ``P (L + L^T)/2 P``, which
    keeps both ``L 1 = 0`` and ``(1, L f) = 0`` exact. Plain averaging would
    leak the discretisation error of ``(1, L f)`` into ``L 1``.
    """
    if isinstance(domain, Annulus):
        from .transport import annulus_dtn

        return annulus_dtn(domain, grid, resolution or 32)
    if grid is None:
        grid = discretize_boundary(domain, resolution or 32)
    fields = lift_basis(grid, domain, gamma, backend=backend, fd_factor=fd_factor, richardson=richardson)
    raw = np.stack([v.conormal_derivative().coeffs for v in fields], axis=1)
    nrm = np.linalg.norm(raw, 2)
    asym = float(np.linalg.norm(raw - raw.T, 2) / nrm) if nrm > 0 else 0.0
    path = fields[0].representation
    log.debug("assembled %dx%d DtN (%s path), relative asymmetry %.2e", *raw.shape, path, asym)
    if check and asym > 1e-2:
        raise AssemblyInconsistency(f"relative asymmetry {asym:.3e} exceeds 1e-2; the solve is under-resolved")
    e = grid.constant_coeffs / np.linalg.norm(grid.constant_coeffs)
    kernel = float(np.linalg.norm(raw @ e))
    if check and kernel > 1e-6 * nrm:
        raise AssemblyInconsistency(f"||L 1|| = {kernel:.3e} is not small relative to ||L|| = {nrm:.3e}")
    sym = 0.5 * (raw + raw.T)
    w = sym @ e
    entries = sym - np.outer(e, w) - np.outer(w, e) + (e @ w) * np.outer(e, e)
    entries = 0.5 * (entries + entries.T)
    if check:
        lam_min = np.linalg.eigvalsh(entries)[0]
        if lam_min < -PSD_TOL * max(1.0, nrm):
            raise AssemblyInconsistency(f"DtN matrix has eigenvalue {lam_min:.3e} < 0")
    entries.setflags(write=False)
    factor = fields[0].solver.n_theta // grid.resolution if path == "grid" else None
    return DtNMatrix(grid, entries, asym, _gamma_tag(gamma), domain, gamma, path, factor)


def spectrum(L: DtNMatrix) -> DtNSpectrum:
    """Full symmetric eigendecomposition in ascending order."""
    A = np.asarray(L.entries)
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise ValueError("DtN matrix must be symmetric")
    w, V = np.linalg.eigh(A)
    w.setflags(write=False)
    V.setflags(write=False)
    return DtNSpectrum(w, V, L)


@dataclass(frozen=True)
class WeylFit:
    exponent: float
    C_est: float
    fit_residual: float
    k_range: tuple

    def __iter__(self):
        return iter((self.exponent, self.C_est, self.fit_residual))


def weyl_fit(spec, d: int, k_range=None) -> WeylFit:
    """Least-squares fit of ``log lambda_k`` against ``log k`` (1-based ``k``).

    The fitted law is ``lambda_k ~ (k / C)^p``; ``p`` should approach
    ``1 / (d - 1)``. ``spec`` may be a :class:`DtNSpectrum` or a plain array
    of ascending eigenvalues. By default the lowest 10% of indices are dropped.
    """
    lam = np.asarray(spec.eigenvalues if isinstance(spec, DtNSpectrum) else spec, dtype=float)
    n = lam.size
    if k_range is None:
        k_range = (max(2, int(np.ceil(0.1 * n)) + 1), n)
    lo, hi = int(k_range[0]), int(k_range[1])
    if lo < 1 or hi > n or lo > hi:
        raise ValueError(f"k_range {k_range} outside 1..{n}")
    k = np.arange(lo, hi + 1)
    if k.size < 8:
        raise ValueError(f"need at least 8 points for a Weyl fit, got {k.size}")
    y = lam[lo - 1 : hi]
    if np.any(y <= 0):
        raise ValueError("eigenvalues must be positive on the fit range")
    X = np.stack([np.log(k), np.ones(k.size)], axis=1)
    coef, *_ = np.linalg.lstsq(X, np.log(y), rcond=None)
    slope, intercept = coef
    resid = float(np.sqrt(np.mean((X @ coef - np.log(y)) ** 2)))
    C = float(np.exp(-intercept / slope)) if slope != 0 else float("nan")
    return WeylFit(float(slope), C, resid, (lo, hi))


def localization_profile(spec: DtNSpectrum, k: int, radii):
    """``(r, max over sampled directions of |v(r omega)|)`` for the lifted ``k``-th eigenfunction.

    ``radii`` are relative (``r / R``). Only disks and balls with a constant
    scalar conductivity are supported, where the lifting is explicit.
    """
    L = spec.matrix_ref
    domain = L.domain if L.domain is not None else L.grid.domain
    scalar = L.gamma is None or L.gamma.constant_scalar is not None
    if not isinstance(domain, (Circle, Sphere)) or not scalar:
        raise UnsupportedConfiguration("explicit localization profiles need a disk or ball with gamma = a I")
    if not 1 <= k <= len(spec):
        raise IndexError(f"eigenfunction index {k} outside 1..{len(spec)}")
    c = spec.eigenvectors[:, k - 1]
    B = L.grid.basis_matrix
    deg = L.grid.basis.degrees.astype(float)
    out = []
    for r in np.atleast_1d(np.asarray(radii, dtype=float)):
        if not 0 < r <= 1:
            raise ValueError(f"relative radius {r} outside (0, 1]")
        vals = B @ (c * r**deg)
        out.append((float(r), float(np.max(np.abs(vals)))))
    return out


def multiplicity_groups(eigenvalues, rtol=1e-8, atol=1e-10):
    """Group index per eigenvalue; consecutive values equal within tolerance share a group."""
    lam = np.asarray(eigenvalues, dtype=float)
    groups = np.zeros(lam.size, dtype=int)
    for i in range(1, lam.size):
        same = abs(lam[i] - lam[i - 1]) <= atol + rtol * abs(lam[i])
        groups[i] = groups[i - 1] + (0 if same else 1)
    return groups


def export_spectrum(spec, path):
    lam = spec.eigenvalues
    groups = multiplicity_groups(lam)
    rows = [(k + 1, float(lam[k]), int(groups[k])) for k in range(lam.size)]
    return write_csv(path, ["k", "lambda", "multiplicity_group"], rows,
                     {"k": "1-based eigenvalue index", "lambda": "DtN eigenvalue",
                      "multiplicity_group": "index of the cluster of numerically equal eigenvalues"})


def export_matrix(L: DtNMatrix, path, fmt="csv"):
    """Dense row-major export plus a JSON sidecar describing grid and conductivity."""
    from pathlib import Path

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        np.savetxt(path, L.entries, delimiter=",", fmt="%.17g")
    elif fmt == "bin":
        np.ascontiguousarray(L.entries, dtype="<f8").tofile(path)
    else:
        raise ValueError(f"unknown matrix format {fmt!r}")
    meta = {
        "shape": list(L.entries.shape),
        "dtype": "float64",
        "order": "row-major",
        "format": fmt,
        "domain": repr(L.grid.domain),
        "resolution": L.grid.resolution,
        "basis_dim": L.grid.dim,
        "gamma": L.gamma_tag,
        "backend": L.backend,
        "asymmetry": L.asymmetry,
    }
    write_json(path.with_suffix(path.suffix + ".json"), meta)
    return path
