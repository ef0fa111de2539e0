"""Matrix-valued conductivities and the matrix-exponential pullback map."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, HypothesisViolation
from .geometry import Annulus, Circle, Domain, InteriorBall, Sphere, StarShaped2D

__all__ = [
    "ConductivityField",
    "identity",
    "const_diag",
    "scalar_field",
    "radial_scalar",
    "anisotropic_demo",
    "gamma_from_config",
    "validate_ellipticity",
    "sym_expm",
    "pullback_point",
]


@dataclass(frozen=True, eq=False)
class ConductivityField:
    """A symmetric, uniformly elliptic matrix field ``gamma(x)``.

    ``evaluator`` maps an ``(n, d)`` array of points to ``(n, d, d)``
    matrices. ``constant_scalar`` is set when the field is ``a * I`` for a
    constant ``a``; solvers use it to pick the closed-form harmonic path.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    dim: int = 2
    declared_c1: Optional[float] = None
    declared_c2: Optional[float] = None
    constant_scalar: Optional[float] = None
    tag: str = "custom"

    def __call__(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.asarray(self.evaluator(points), dtype=float)

    @property
    def is_identity(self):
        return self.constant_scalar == 1.0


@lru_cache(maxsize=None)
def identity(dim=2):
    """The identity field; one shared instance per dimension."""
    eye = np.eye(dim)
    return ConductivityField(
        lambda x: np.broadcast_to(eye, (x.shape[0], dim, dim)).copy(), dim, 1.0, 1.0, 1.0, "identity"
    )


def const_diag(d):
    d = np.asarray(d, dtype=float)
    mat = np.diag(d)
    scalar = float(d[0]) if np.all(d == d[0]) else None
    tag = "const_diag(" + ",".join(f"{v:g}" for v in d) + ")"
    return ConductivityField(
        lambda x: np.broadcast_to(mat, (x.shape[0],) + mat.shape).copy(),
        d.size,
        float(d.min()),
        float(d.max()),
        scalar,
        tag,
    )


def scalar_field(fn, dim=2, tag="scalar"):
    """``gamma(x) = fn(x) * I`` for a vectorised positive function ``fn``."""
    eye = np.eye(dim)
    return ConductivityField(lambda x: np.asarray(fn(x), dtype=float)[:, None, None] * eye, dim, tag=tag)


def radial_scalar(coeffs, dim=2):
    """``gamma(x) = (c0 + c1 |x| + c2 |x|^2 + ...) * I``."""
    c = np.asarray(coeffs, dtype=float)
    if c.size == 1:
        field = const_diag(np.full(dim, c[0]))
        return ConductivityField(field.evaluator, dim, field.declared_c1, field.declared_c2, float(c[0]),
                                 f"radial_scalar({c[0]:g})")
    tag = "radial_scalar(" + ",".join(f"{v:g}" for v in c) + ")"
    return scalar_field(lambda x: np.polynomial.polynomial.polyval(np.linalg.norm(x, axis=-1), c), dim, tag)


def anisotropic_demo(eps):
    """``gamma(x) = I + eps * x x^T``; eigenvalues ``1`` and ``1 + eps |x|^2``."""
    eps = float(eps)
    eye = np.eye(2)

    def evaluate(x):
        return eye + eps * x[:, :, None] * x[:, None, :]

    return ConductivityField(evaluate, 2, tag=f"anisotropic_demo({eps:g})")


_GAMMA_KEYS = {
    "identity": {"kind"},
    "const_diag": {"kind", "d"},
    "radial_scalar": {"kind", "expr_coeffs"},
    "anisotropic_demo": {"kind", "eps"},
}


def gamma_from_config(block, dim=2):
    if block is None:
        return identity(dim)
    if not isinstance(block, dict) or "kind" not in block:
        raise ConfigError("gamma block needs a 'kind'", key="gamma.kind")
    kind = block["kind"]
    if kind not in _GAMMA_KEYS:
        raise ConfigError(f"unknown gamma kind {kind!r} (expected one of {sorted(_GAMMA_KEYS)})", key="gamma.kind")
    unknown = set(block) - _GAMMA_KEYS[kind]
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} for gamma kind {kind!r}", key="gamma")
    if kind == "identity":
        return identity(dim)
    if kind == "const_diag":
        d = block.get("d")
        if not isinstance(d, list) or len(d) != dim:
            raise ConfigError(f"const_diag needs d with {dim} entries", key="gamma.d")
        return const_diag(d)
    if kind == "radial_scalar":
        c = block.get("expr_coeffs")
        if not isinstance(c, list) or not c:
            raise ConfigError("radial_scalar needs a non-empty expr_coeffs list", key="gamma.expr_coeffs")
        return radial_scalar(c, dim)
    if dim != 2:
        raise ConfigError("anisotropic_demo is planar only", key="gamma.kind")
    return anisotropic_demo(block.get("eps", 0.3))


def _sample_points(domain, samples):
    """Deterministic tensor grid of about ``samples`` points covering the closed domain."""
    total = int(max(samples, 1))
    if isinstance(domain, Sphere):
        n = max(2, int(round(total ** (1 / 3))))
        r = np.linspace(0.0, domain.R, n)
        th = np.linspace(0.0, np.pi, n)
        ph = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        Rr, T, P = np.meshgrid(r, th, ph, indexing="ij")
        return np.stack([Rr * np.sin(T) * np.cos(P), Rr * np.sin(T) * np.sin(P), Rr * np.cos(T)], -1).reshape(-1, 3)
    n = max(2, int(round(np.sqrt(total))))
    s = np.linspace(0.0, 1.0, n)
    th = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    S, T = np.meshgrid(s, th, indexing="ij")
    if isinstance(domain, Annulus):
        r = domain.R_inner + S * (domain.R_outer - domain.R_inner)
    elif isinstance(domain, (Circle, StarShaped2D)):
        r = S * domain.rho(T)
    else:
        raise ValueError(f"cannot sample {domain!r}")
    return np.stack([r * np.cos(T), r * np.sin(T)], -1).reshape(-1, 2)


def validate_ellipticity(gamma: ConductivityField, domain: Domain, samples: Optional[int] = None):
    """Sampled ellipticity constants ``(c1, c2)`` of ``gamma`` over the closed domain.

    Samples a polar tensor grid (which includes boundary points). Raises
    :class:`HypothesisViolation` on an asymmetric sample or a non-positive
    eigenvalue.
    """
    if samples is None:
        samples = 1000 if domain.dim == 3 else 10_000
    if samples < 1:
        raise ValueError("samples must be >= 1")
    pts = _sample_points(domain, samples)
    mats = gamma(pts)
    asym = np.max(np.abs(mats - np.swapaxes(mats, 1, 2)))
    if asym > 1e-12:
        raise HypothesisViolation("symmetry", f"gamma is not symmetric (max |g - g^T| = {asym:.3e})")
    eig = np.linalg.eigvalsh(mats)
    c1, c2 = float(eig.min()), float(eig.max())
    if not c1 > 0:
        raise HypothesisViolation("ellipticity", f"gamma has a non-positive eigenvalue ({c1:.3e})")
    return c1, c2


def sym_expm(A):
    """Exponential of a stack of symmetric matrices via ``eigh``."""
    A = np.asarray(A, dtype=float)
    w, Q = np.linalg.eigh(A)
    return (Q * np.exp(w)[..., None, :]) @ np.swapaxes(Q, -1, -2)


def pullback_point(omega, normal, ball, t, gamma: ConductivityField, s: float = 1.0):
    """Interior points ``e^{-(t/R) gamma(omega)} omega`` (ball form) or
    ``x_s + e^{-(t/(s r)) gamma(omega)} (s r nu)`` (interior-ball form).

    ``omega`` and ``normal`` may be single points or ``(n, d)`` arrays.
    ``ball`` is either a radius ``R`` (ball centred at the origin) or one
    :class:`InteriorBall` per point.
    """
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    if not 0 < s <= 1:
        raise ValueError(f"s must lie in (0, 1], got {s}")
    omega = np.asarray(omega, dtype=float)
    single = omega.ndim == 1
    omega = np.atleast_2d(omega)
    normal = np.atleast_2d(np.asarray(normal, dtype=float))
    g = gamma(omega)
    if isinstance(ball, (int, float, np.floating, np.integer)):
        R = float(ball)
        out = np.einsum("nij,nj->ni", sym_expm(-(t / R) * g), omega)
    else:
        balls = [ball] if isinstance(ball, InteriorBall) else list(ball)
        r = s * np.array([b.radius for b in balls])
        centers = np.array([b.scaled_center(s) for b in balls])
        E = sym_expm(-(t / r)[:, None, None] * g)
        out = centers + np.einsum("nij,nj->ni", E, r[:, None] * normal)
    return out[0] if single else out
