"""The DtN semigroup ``U(t) = exp(-t L)`` by spectral calculus, and the Lax semigroup on balls."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import gammaincc

from .conductivity import ConductivityField
from .dtn_operator import DtNSpectrum, weyl_fit
from .errors import AssemblyInconsistency, UnsupportedConfiguration
from .geometry import Circle, Sphere
from .harmonic_lift import BoundaryFunction, SpectralField
from .io import write_csv

__all__ = [
    "SemigroupOperator",
    "TraceNorm",
    "evolve",
    "trace_norm",
    "weyl_tail_bound",
    "lax_apply",
    "generator_defect",
    "export_semigroup_action",
    "export_trace_norm_curve",
]

NEG_TOL = 1e-8


def _check_time(t, strict=False):
    t = float(t)
    if not np.isfinite(t) or t < 0 or (strict and t == 0):
        raise ValueError(f"t must be {'positive' if strict else 'non-negative'}, got {t}")
    return t


def _check_spectrum(spec):
    lam = spec.eigenvalues
    if lam.size and lam[0] < -NEG_TOL * max(1.0, abs(lam[-1])):
        raise AssemblyInconsistency(f"negative DtN eigenvalue {lam[0]:.3e}")


@dataclass(frozen=True, eq=False)
class SemigroupOperator:
    """``U(t) = sum_k exp(-t lambda_k) phi_k phi_k^T`` in basis coefficients."""

    spec: DtNSpectrum
    t: float

    def __post_init__(self):
        object.__setattr__(self, "t", _check_time(self.t))
        _check_spectrum(self.spec)

    @property
    def multipliers(self):
        return np.exp(-self.t * self.spec.eigenvalues)

    @cached_property
    def matrix(self):
        n = len(self.spec)
        if self.t == 0:
            M = np.eye(n)
        else:
            V = self.spec.eigenvectors
            M = (V * self.multipliers) @ V.T
            M = 0.5 * (M + M.T)
        M.setflags(write=False)
        return M

    def __call__(self, f: BoundaryFunction) -> BoundaryFunction:
        return evolve(self.spec, self.t, f)


def evolve(spec: DtNSpectrum, t, f: BoundaryFunction) -> BoundaryFunction:
    """``U(t) f`` computed as ``sum_k exp(-t lambda_k) (phi_k, f) phi_k``."""
    t = _check_time(t)
    _check_spectrum(spec)
    if t == 0:
        return f
    V = spec.eigenvectors
    c = V @ (np.exp(-t * spec.eigenvalues) * (V.T @ f.coeffs))
    return BoundaryFunction(f.grid, c)


@dataclass(frozen=True)
class TraceNorm:
    """Truncated trace norm with the size of the truncation and a tail estimate.

    ``tail_bound`` is ``None`` when the spectrum is too short for a Weyl fit.
    """

    value: float
    truncation: int
    tail_bound: Optional[float]

    def __float__(self):
        return self.value


def weyl_tail_bound(exponent, C, K, t):
    """``int_K^inf exp(-t (k / C)^p) dk = (C / p) t^(-1/p) Gamma(1/p, t (K / C)^p)``."""
    p = float(exponent)
    if p <= 0 or C <= 0:
        return float("inf")
    a = 1.0 / p
    x = t * (K / C) ** p
    return float(C / p * t ** (-a) * gammaincc(a, x) * gamma_fn(a))


def trace_norm(spec, t) -> TraceNorm:
    """``||U(t)||_1 = sum_k exp(-t lambda_k)`` over the computed spectrum.

    The neglected tail beyond the truncation is bounded with the fitted Weyl
    law of the same spectrum. ``spec`` may also be a plain eigenvalue array.
    """
    t = _check_time(t, strict=True)
    lam = np.asarray(spec.eigenvalues if isinstance(spec, DtNSpectrum) else spec, dtype=float)
    if lam.size and lam[0] < -NEG_TOL * max(1.0, abs(lam[-1])):
        raise AssemblyInconsistency(f"negative DtN eigenvalue {lam[0]:.3e}")
    value = float(np.sum(np.exp(-t * np.sort(lam))[::-1]))
    try:
        fit = weyl_fit(lam, 0)
    except ValueError:
        tail = None
    else:
        tail = weyl_tail_bound(fit.exponent, fit.C_est, lam.size, t)
    return TraceNorm(value, int(lam.size), tail)


def lax_apply(f: BoundaryFunction, t, domain=None, gamma: Optional[ConductivityField] = None) -> BoundaryFunction:
    """``(S(t) f)(omega) = v_f(exp(-t/R) omega)`` on a disk or ball, gamma = I.

    The harmonic lifting is evaluated at the contracted nodes and projected
    back onto the boundary basis.
    """
    t = _check_time(t)
    domain = f.grid.domain if domain is None else domain
    if not isinstance(domain, (Circle, Sphere)):
        raise UnsupportedConfiguration("the Lax semigroup is defined on disks and balls")
    if gamma is not None and not gamma.is_identity:
        raise UnsupportedConfiguration("the Lax semigroup needs gamma = I")
    if t == 0:
        return f
    v = SpectralField(domain, None, f)
    grid = f.grid
    vals = v.evaluate(np.exp(-t / domain.R) * grid.nodes)
    return BoundaryFunction(grid, grid.project(vals))


def generator_defect(spec: DtNSpectrum, f: BoundaryFunction, t_list):
    """``||(f - U(t) f)/t - L f||`` for each ``t``; first order in ``t`` for smooth ``f``."""
    lam = spec.eigenvalues
    V = spec.eigenvectors
    a = V.T @ f.coeffs
    out = []
    for t in t_list:
        t = _check_time(t, strict=True)
        d = (-np.expm1(-t * lam) / t - lam) * a
        out.append(float(np.linalg.norm(d)))
    return np.array(out)


def export_semigroup_action(spec: DtNSpectrum, t_list, path):
    rows = []
    for t in t_list:
        t = _check_time(t)
        for k, lam in enumerate(spec.eigenvalues, start=1):
            rows.append((t, k, float(np.exp(-t * lam))))
    return write_csv(path, ["t", "mode_index", "multiplier"], rows,
                     {"t": "time", "mode_index": "1-based eigenvalue index",
                      "multiplier": "exp(-t lambda_k)"})


def export_trace_norm_curve(spec, t_list, path):
    rows = []
    for t in t_list:
        tn = trace_norm(spec, t)
        rows.append((float(t), tn.value, float("nan") if tn.tail_bound is None else tn.tail_bound))
    return write_csv(path, ["t", "trace_norm", "tail_bound"], rows,
                     {"trace_norm": "sum of exp(-t lambda_k) over the computed spectrum",
                      "tail_bound": "Weyl-fit bound on the neglected tail"})
