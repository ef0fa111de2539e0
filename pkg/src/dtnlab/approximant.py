"""The pullback approximating family, its Chernoff products and convergence diagnostics.

``V(t) f`` evaluates the gamma-harmonic lifting of ``f`` at boundary points
pulled into the domain by ``exp(-(t/r) gamma(omega))``. On a ball centred at
the origin the pullback is ``exp(-(t/R) gamma(omega)) omega``; on other
domains it uses the largest interior ball tangent at each node, optionally
shrunk by a factor ``s``. The family is linear, so it is stored as a dense
matrix acting on boundary basis coefficients, each column being the
lifting of one basis function.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .conductivity import ConductivityField, pullback_point
from .dtn_operator import DtNSpectrum
from .errors import ResourceError
from .geometry import BoundaryGrid, Circle, Sphere, interior_ball
from .harmonic_lift import BoundaryFunction, _backend, _planar_angles, _sphere_angles, lift_basis
from .io import write_csv

__all__ = [
    "ApproximantOperator",
    "ApproximantFamily",
    "approximant_family",
    "v_step",
    "chernoff_product",
    "ConvergenceRow",
    "convergence_report",
    "w_factor",
    "telescopic_check",
    "semigroup_defect",
    "nuclear_norm",
    "export_convergence",
    "DEFAULT_MAX_SIZE",
]

log = logging.getLogger(__name__)

DEFAULT_MAX_SIZE = 1024
W_EXP_CAP = 30.0


def nuclear_norm(A):
    """Trace norm: the sum of singular values."""
    return float(np.sum(np.linalg.svd(A, compute_uv=False)))


@dataclass(frozen=True, eq=False)
class ApproximantOperator:
    """Dense ``V(t)`` on basis coefficients.

    ``nodal`` maps coefficients of ``f`` to the values ``v_f(pullback(omega_j))``
    at the grid nodes before projection.
    """

    grid: BoundaryGrid
    t: float
    s: float
    matrix: np.ndarray = field(repr=False)
    nodal: np.ndarray = field(repr=False)

    def __call__(self, f: BoundaryFunction) -> BoundaryFunction:
        return BoundaryFunction(self.grid, self.matrix @ f.coeffs)

    def nodal_values(self, f: BoundaryFunction):
        return self.nodal @ f.coeffs


class ApproximantFamily:
    """``t -> V(t)`` for a fixed domain, conductivity, grid and interior-ball scale.

    Operators are cached per ``t``.
    """

    def __init__(self, domain, gamma: Optional[ConductivityField], grid: BoundaryGrid, s: float = 1.0, *,
                 backend="auto", fd_factor=None):
        if not 0 < s <= 1:
            raise ValueError(f"s must lie in (0, 1], got {s}")
        self.domain = domain
        self.gamma = gamma
        self.grid = grid
        self.s = float(s)
        self.backend = _backend(domain, gamma, backend)
        self.fd_factor = fd_factor
        self._cache = {}
        self._fields = None

    @property
    def _gamma(self):
        if self.gamma is not None:
            return self.gamma
        from .conductivity import identity

        return identity(self.domain.dim)

    def _pullback(self, nodes, normals, t):
        if isinstance(self.domain, (Circle, Sphere)) and self.s == 1.0:
            return pullback_point(nodes, normals, self.domain.R, t, self._gamma)
        balls = _interior_balls(self.domain, nodes)
        return pullback_point(nodes, normals, balls, t, self._gamma, self.s)

    def _lifts(self):
        if self._fields is None:
            self._fields = lift_basis(self.grid, self.domain, self.gamma, backend=self.backend,
                                      fd_factor=self.fd_factor)
        return self._fields

    def _spectral_design(self, points):
        basis = self.grid.basis
        r = np.linalg.norm(points, axis=-1) / self.domain.R
        if isinstance(self.domain, Sphere):
            E = basis.evaluate(_sphere_angles(points))
        else:
            E = basis.evaluate(_planar_angles(points))
        return E * np.power.outer(r, basis.degrees.astype(float))

    def operator(self, t) -> ApproximantOperator:
        t = float(t)
        if t < 0:
            raise ValueError(f"t must be non-negative, got {t}")
        if t in self._cache:
            return self._cache[t]
        grid = self.grid
        n = grid.dim
        if t == 0:
            op = ApproximantOperator(grid, t, self.s, _ro(np.eye(n)), _ro(grid.basis_matrix.copy()))
        elif self.backend == "spectral":
            nodal = self._spectral_design(self._pullback(grid.nodes, grid.normals, t))
            op = ApproximantOperator(grid, t, self.s, _ro(grid.project(nodal)), _ro(nodal))
        else:
            fields = self._lifts()
            fine = fields[0].fine_grid
            solver = fields[0].solver
            pts = self._pullback(fine.nodes, fine.normals, t)
            s_c, th_c = solver.to_computational(pts)
            vals = np.stack([v.evaluate_computational(s_c, th_c) for v in fields], axis=1)
            stride, rem = divmod(fine.n_nodes, grid.n_nodes)
            if rem == 0:
                nodal = vals[::stride]
            else:
                s_g, th_g = solver.to_computational(self._pullback(grid.nodes, grid.normals, t))
                nodal = np.stack([v.evaluate_computational(s_g, th_g) for v in fields], axis=1)
            op = ApproximantOperator(grid, t, self.s, _ro(fine.project(vals)), _ro(nodal))
        self._cache[t] = op
        return op

    def __call__(self, t):
        return self.operator(t)


def _ro(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


_BALL_CACHE = {}


def _interior_balls(domain, nodes):
    key = (id(domain), nodes.shape, nodes.tobytes())
    if key not in _BALL_CACHE:
        _BALL_CACHE[key] = (domain, [interior_ball(domain, w) for w in nodes])
    return _BALL_CACHE[key][1]


@lru_cache(maxsize=32)
def approximant_family(domain, gamma, grid, s=1.0, backend="auto", fd_factor=None) -> ApproximantFamily:
    """Shared :class:`ApproximantFamily` per configuration."""
    return ApproximantFamily(domain, gamma, grid, s, backend=backend, fd_factor=fd_factor)


def _family(f, domain, gamma, s, backend, fd_factor):
    domain = f.grid.domain if domain is None else domain
    return approximant_family(domain, gamma, f.grid, float(s), backend, fd_factor)


def v_step(f: BoundaryFunction, t, domain=None, gamma: Optional[ConductivityField] = None, s=1.0, *,
           backend="auto", fd_factor=None) -> BoundaryFunction:
    """One application ``V(t) f``: lift ``f``, evaluate at the pulled-back nodes, project."""
    return _family(f, domain, gamma, s, backend, fd_factor).operator(t)(f)


def chernoff_product(f: BoundaryFunction, t, n: int, domain=None, gamma: Optional[ConductivityField] = None,
                     s=1.0, *, backend="auto", fd_factor=None) -> BoundaryFunction:
    """``(V(t/n))^n f``.

    Every factor lifts the current iterate afresh (the operator matrix holds
    the liftings of the basis functions), since the family does not compose
    as a semigroup.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    V = _family(f, domain, gamma, s, backend, fd_factor).operator(t / n)
    g = f
    for _ in range(n):
        g = V(g)
    return g


def semigroup_defect(family: ApproximantFamily, t, s):
    """``||V(t) V(s) - V(t + s)||`` in operator norm."""
    A = family.operator(t).matrix @ family.operator(s).matrix - family.operator(t + s).matrix
    return float(np.linalg.norm(A, 2))


def _spectral_power(spec: DtNSpectrum, t):
    V = spec.eigenvectors
    return (V * np.exp(-t * spec.eigenvalues)) @ V.T


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    op_err: float
    tr_err: float
    k_n: int
    m_n: int
    bound_term1: float
    bound_term2: float
    gg_ratio: float

    @property
    def bound(self):
        return self.bound_term1 + self.bound_term2


def convergence_report(family: ApproximantFamily, spec: DtNSpectrum, t, n_list, *, max_size=DEFAULT_MAX_SIZE):
    """Errors ``||Delta_n(t)||`` and ``||Delta_n(t)||_1`` with the split bound terms.

    ``Delta_n(t) = V(t/n)^n - U(t)``. With ``k = [n/2]``, ``m = [(n+1)/2]``
    the trace-norm error is bounded by

        ||V^k - U^k|| ||V^m||_1 + ||U^k||_1 ||V^m - U^m||

    (all at step ``t/n``); both terms are reported. ``gg_ratio`` is
    ``||V(t/n)^m||_1 / ||U(m t / n)||_1``.
    """
    n_list = [int(n) for n in n_list]
    if any(n < 2 for n in n_list):
        raise ValueError("every n must be >= 2")
    size = family.grid.dim
    if size > max_size:
        raise ResourceError(f"matrix size {size} exceeds the configured cap {max_size}")
    Ut = _spectral_power(spec, t)
    rows = []
    for n in n_list:
        tau = t / n
        V = family.operator(tau).matrix
        k, m = n // 2, (n + 1) // 2
        Vk = np.linalg.matrix_power(V, k)
        Vm = Vk if m == k else Vk @ V
        Uk = _spectral_power(spec, k * tau)
        Um = _spectral_power(spec, m * tau)
        D = Vk @ Vm - Ut
        tr_Vm = nuclear_norm(Vm)
        term1 = float(np.linalg.norm(Vk - Uk, 2)) * tr_Vm
        term2 = nuclear_norm(Uk) * float(np.linalg.norm(Vm - Um, 2))
        rows.append(ConvergenceRow(n, float(np.linalg.norm(D, 2)), nuclear_norm(D), k, m, term1, term2,
                                   tr_Vm / nuclear_norm(Um)))
        log.debug("n=%d op_err=%.3e tr_err=%.3e", n, rows[-1].op_err, rows[-1].tr_err)
    return rows


def w_factor(family: ApproximantFamily, spec: DtNSpectrum, t, K: int):
    """``W = V(t) exp(+t L_K)`` on the span of the first ``K`` eigenfunctions.

    Returns ``(W, ||W||, K_used)``. ``K`` is reduced to the largest value
    with ``t lambda_K <= 30`` so the exponential stays in a safe range.
    """
    t = float(t)
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    if not 1 <= K <= len(spec):
        raise ValueError(f"K must lie in 1..{len(spec)}")
    lam = spec.eigenvalues
    usable = int(np.searchsorted(t * lam, W_EXP_CAP, side="right"))
    K_used = max(1, min(K, usable))
    if K_used < K:
        log.info("w_factor: K capped from %d to %d (t lambda_K > %g)", K, K_used, W_EXP_CAP)
    P = spec.eigenvectors[:, :K_used]
    V = family.operator(t).matrix
    W = (V @ P) * np.exp(t * lam[:K_used]) @ P.T
    return W, float(np.linalg.norm(W, 2)), K_used


def telescopic_check(family: ApproximantFamily, spec: DtNSpectrum, t, n: int):
    """Spectral-norm residual of ``V^n - U^n = sum_s V^(n-s-1) (V - U) U^s`` at step ``t/n``."""
    n = int(n)
    if n < 2:
        raise ValueError("n must be >= 2")
    tau = t / n
    V = family.operator(tau).matrix
    U = _spectral_power(spec, tau)
    lhs = np.linalg.matrix_power(V, n) - np.linalg.matrix_power(U, n)
    rhs = np.zeros_like(lhs)
    Vp = [np.eye(V.shape[0])]
    for _ in range(n - 1):
        Vp.append(Vp[-1] @ V)
    Us = np.eye(V.shape[0])
    D = V - U
    for s in range(n):
        rhs += Vp[n - s - 1] @ D @ Us
        Us = Us @ U
    return float(np.linalg.norm(lhs - rhs, 2))


def export_convergence(rows, path):
    return write_csv(
        path,
        ["n", "op_err", "tr_err", "bound_term1", "bound_term2"],
        [(r.n, r.op_err, r.tr_err, r.bound_term1, r.bound_term2) for r in rows],
        {"op_err": "spectral norm of V(t/n)^n - U(t)", "tr_err": "trace norm of V(t/n)^n - U(t)",
         "bound_term1": "||V^k - U^k|| ||V^m||_1 with k = [n/2], m = [(n+1)/2]",
         "bound_term2": "||U^k||_1 ||V^m - U^m||"},
    )
