"""Second-order conservative finite differences for ``div(gamma grad v) = 0``.

The physical domain ``{r < rho(theta)}`` is the image of the computational
rectangle ``(s, theta) in (0, 1] x [0, 2 pi)`` under

    x(s, theta) = s * (rho_bar + chi(s) * (rho(theta) - rho_bar)) * e_r(theta),

where ``chi`` is a C-infinity ramp that vanishes for ``s <= s_blend``. Near the
origin the map is therefore an exact polar scaling, which lets the radial
grid be half-shifted: ``s_i = (i - 1/2) h`` with ``s_N = 1`` on the boundary.
The face at ``s = 0`` has zero radial flux coefficient and the ghost row at
``s = -h/2`` coincides with row 1 rotated by ``pi``, so the pole needs no
special unknown. In computational coordinates the equation reads
``d_a (M^{ab} d_b v) = 0`` with ``M = J (D xi) gamma (D xi)^T``, discretised by
the standard 9-point conservative stencil.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.interpolate import RectBivariateSpline
from scipy.sparse.linalg import splu

from .errors import InvalidDomainError, OutOfDomainError, SolverDivergence

TWO_PI = 2.0 * np.pi


def _psi(u):
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def _dpsi(u):
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos]) / u[pos] ** 2
    return out


class PolarGridSolver:
    """Direct sparse solver for the conductivity Dirichlet problem on a mapped polar grid."""

    def __init__(self, domain, gamma, n_s, n_theta, s_blend=0.25):
        if n_theta % 2:
            raise ValueError("n_theta must be even (the pole reflection pairs theta with theta + pi)")
        if n_s < 8:
            raise ValueError("n_s must be at least 8")
        self.domain = domain
        self.gamma = gamma
        self.n_s = int(n_s)
        self.n_theta = int(n_theta)
        self.s_blend = float(s_blend)
        self.h = 1.0 / (self.n_s - 0.5)
        self.k = TWO_PI / self.n_theta
        self.s = (np.arange(1, self.n_s + 1) - 0.5) * self.h
        self.s[-1] = 1.0
        self.theta = self.k * np.arange(self.n_theta)
        self._rho_bar = float(domain.rho_mean)
        self._check_map()
        self._build()

    # -- geometry of the map -------------------------------------------------

    def _chi(self, s):
        u = (np.asarray(s, dtype=float) - self.s_blend) / (1.0 - self.s_blend)
        a, b = _psi(u), _psi(1.0 - u)
        return a / (a + b)

    def _dchi(self, s):
        u = (np.asarray(s, dtype=float) - self.s_blend) / (1.0 - self.s_blend)
        a, b = _psi(u), _psi(1.0 - u)
        da, db = _dpsi(u), _dpsi(1.0 - u)
        return (da * b + a * db) / (a + b) ** 2 / (1.0 - self.s_blend)

    def _map(self, s, theta):
        """Radius ``R`` and its partial derivatives ``R_s``, ``R_theta``; also ``g = R / s``."""
        s = np.asarray(s, dtype=float)
        theta = np.asarray(theta, dtype=float)
        dev = self.domain.rho(theta) - self._rho_bar
        chi = self._chi(s)
        g = self._rho_bar + chi * dev
        R = s * g
        Rs = g + s * self._dchi(s) * dev
        Rt = s * chi * self.domain.drho(theta)
        return R, Rs, Rt, g, chi

    def _check_map(self):
        s = np.linspace(0.0, 1.0, 257)
        S, T = np.meshgrid(s, np.linspace(0, TWO_PI, 512, endpoint=False), indexing="ij")
        _, Rs, _, g, _ = self._map(S, T)
        if np.any(Rs <= 0) or np.any(g <= 0):
            raise InvalidDomainError("the polar blend map is not monotone for this rho(theta)")

    def _gamma_frame(self, s, theta):
        """``gamma`` at ``x(s, theta)`` in the polar frame: (g_rr, g_rp, g_pp)."""
        s, theta = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(theta, dtype=float))
        R = self._map(s, theta)[0]
        c, sn = np.cos(theta), np.sin(theta)
        pts = np.stack([R * c, R * sn], axis=-1).reshape(-1, 2)
        G = self.gamma(pts).reshape(s.shape + (2, 2))
        er = np.stack([c, sn], axis=-1)
        ep = np.stack([-sn, c], axis=-1)
        g_rr = np.einsum("...i,...ij,...j->...", er, G, er)
        g_rp = np.einsum("...i,...ij,...j->...", er, G, ep)
        g_pp = np.einsum("...i,...ij,...j->...", ep, G, ep)
        return g_rr, g_rp, g_pp

    def metric(self, s, theta):
        """Coefficients ``(M_ss, M_st, M_tt)`` of the conservative operator."""
        s, theta = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(theta, dtype=float))
        _, Rs, _, g, chi = self._map(s, theta)
        dr = self.domain.drho(theta)
        g_rr, g_rp, g_pp = self._gamma_frame(s, theta)
        with np.errstate(divide="ignore", invalid="ignore"):
            m_ss = s * (g * g_rr - 2.0 * chi * dr * g_rp + (chi * dr) ** 2 * g_pp / g) / Rs
            m_st = g_rp - chi * dr / g * g_pp
            m_tt = Rs * g_pp / (s * g)
        return m_ss, m_st, m_tt

    # -- assembly ------------------------------------------------------------

    def _build(self):
        ns, nt, h, k = self.n_s, self.n_theta, self.h, self.k
        ii = np.arange(ns - 1)
        jj = np.arange(nt)
        I, J = np.meshgrid(ii, jj, indexing="ij")
        sc = self.s[I]
        tc = self.theta[J]

        a_p = self.metric(sc + h / 2, tc)[0] / h**2
        a_m = np.where(I == 0, 0.0, self.metric(np.maximum(sc - h / 2, 0.0), tc)[0] / h**2)
        b_p = self.metric(sc, tc + k / 2)[2] / k**2
        b_m = self.metric(sc, tc - k / 2)[2] / k**2
        scale = 1.0 / (4 * h * k)
        c_p = self.metric(sc + h, tc)[1] * scale
        c_m = self.metric(sc - h, tc)[1] * scale
        d_p = self.metric(sc, tc + k)[1] * scale
        d_m = self.metric(sc, tc - k)[1] * scale

        rows, cols, vals = [], [], []
        row = I * nt + J

        def add(di, dj, v):
            ti = I + di
            tj = (J + dj) % nt
            ghost = ti < 0
            tj = np.where(ghost, (tj + nt // 2) % nt, tj)
            ti = np.where(ghost, 0, ti)
            rows.append(row.ravel())
            cols.append((ti * nt + tj).ravel())
            vals.append(np.broadcast_to(v, I.shape).ravel())

        add(0, 0, -(a_p + a_m + b_p + b_m))
        add(1, 0, a_p)
        add(-1, 0, a_m)
        add(0, 1, b_p)
        add(0, -1, b_m)
        add(1, 1, c_p + d_p)
        add(1, -1, -c_p - d_m)
        add(-1, 1, -c_m - d_p)
        add(-1, -1, c_m + d_m)

        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
        keep = vals != 0.0
        n_int = (ns - 1) * nt
        full = sparse.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(n_int, ns * nt))
        self._A = full[:, :n_int].tocsc()
        self._B = full[:, n_int:].tocsc()
        self._lu = splu(self._A)
        self.n_unknowns = n_int

    # -- solves --------------------------------------------------------------

    def solve(self, boundary_values, *, check=True):
        """Fields on the grid (shape ``(n_s, n_theta[, m])``) with the given boundary values."""
        f = np.asarray(boundary_values, dtype=float)
        single = f.ndim == 1
        F = f[:, None] if single else f
        rhs = -(self._B @ F)
        v = self._lu.solve(np.ascontiguousarray(rhs))
        if check:
            res = self._A @ v - rhs
            scale = max(np.abs(rhs).max(), 1e-300)
            rel = float(np.abs(res).max() / scale)
            if not np.isfinite(rel) or rel > 1e-8:
                raise SolverDivergence("direct solve did not reach tolerance", rel)
        out = np.concatenate([v.reshape(self.n_s - 1, self.n_theta, -1), F[None]], axis=0)
        return out[..., 0] if single else out

    def residual(self, field):
        """Max-norm residual of the discrete equations, relative to the operator scale."""
        v = np.asarray(field)
        m = v.reshape(self.n_s * self.n_theta, -1)
        n_int = self.n_unknowns
        res = self._A @ m[:n_int] + self._B @ m[n_int:]
        return float(np.abs(res).max() / max(abs(self._A).max() * np.abs(m).max(), 1e-300))

    # -- derived quantities --------------------------------------------------

    def _dtheta(self, values, axis):
        kk = np.fft.rfftfreq(self.n_theta, 1.0 / self.n_theta)
        kk[-1] = 0.0  # Nyquist mode carries no derivative
        shape = [1] * values.ndim
        shape[axis] = -1
        spec = np.fft.rfft(values, axis=axis)
        return np.fft.irfft(1j * kk.reshape(shape) * spec, n=self.n_theta, axis=axis)

    @cached_property
    def _boundary_frame(self):
        th = self.theta
        R, Rs, Rt, _, _ = self._map(np.ones_like(th), th)
        m_ss, m_st, _ = self.metric(np.ones_like(th), th)
        J = Rs * R
        grad_s_norm = np.sqrt(1.0 / Rs**2 + (Rt / (Rs * R)) ** 2)
        return m_ss / J, m_st / J, grad_s_norm

    def conormal(self, field):
        """``nu . gamma grad v`` at the boundary nodes (one-sided second-order in ``s``)."""
        v = np.asarray(field)
        h = self.h
        vs = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
        vt = self._dtheta(v[-1], axis=0)
        G_ss, G_st, nrm = self._boundary_frame
        if v.ndim == 3:
            G_ss, G_st, nrm = G_ss[:, None], G_st[:, None], nrm[:, None]
        return (G_ss * vs + G_st * vt) / nrm

    @cached_property
    def _node_metric(self):
        S, T = np.meshgrid(self.s, self.theta, indexing="ij")
        return self.metric(S, T)

    def energy(self, field):
        """``int grad v . gamma grad v dx`` by second-order quadrature on the grid."""
        v = np.asarray(field, dtype=float)
        h, k, nt = self.h, self.k, self.n_theta
        ghost = np.roll(v[0], -(nt // 2), axis=0)
        vs = np.empty_like(v)
        vs[0] = (v[1] - ghost) / (2 * h)
        vs[1:-1] = (v[2:] - v[:-2]) / (2 * h)
        vs[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * h)
        vt = self._dtheta(v, axis=1)
        m_ss, m_st, m_tt = self._node_metric
        if v.ndim == 3:
            m_ss, m_st, m_tt = m_ss[..., None], m_st[..., None], m_tt[..., None]
        q = m_ss * vs**2 + 2 * m_st * vs * vt + m_tt * vt**2
        Q = q.sum(axis=1) * k
        return Q[0] * h / 4 + h * (0.5 * Q[0] + Q[1:-1].sum(axis=0) + 0.5 * Q[-1])

    # -- coordinates and interpolation --------------------------------------

    def to_computational(self, points):
        """``(s, theta)`` for physical points; raises if a point lies outside the closure."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.hypot(p[:, 0], p[:, 1])
        theta = np.mod(np.arctan2(p[:, 1], p[:, 0]), TWO_PI)
        rho = self.domain.rho(theta)
        s = r / rho
        if np.any(s > 1 + 1e-12):
            raise OutOfDomainError("point outside the domain")
        for _ in range(60):
            R, Rs, _, _, _ = self._map(s, theta)
            step = (R - r) / Rs
            s = np.clip(s - step, 0.0, 1.0)
            if np.max(np.abs(step)) < 1e-15:
                break
        return s, theta

    def interpolator(self, field, pad=4):
        """Bicubic spline of a grid field, periodic in ``theta`` and reflected through the pole."""
        v = np.asarray(field, dtype=float)
        nt = self.n_theta
        ghost = np.roll(v[:pad], -(nt // 2), axis=1)[::-1]
        data = np.concatenate([ghost, v], axis=0)
        s_aug = np.concatenate([-self.s[:pad][::-1], self.s])
        data = np.concatenate([data[:, -pad:], data, data[:, :pad]], axis=1)
        t_aug = self.k * np.arange(-pad, nt + pad)
        spline = RectBivariateSpline(s_aug, t_aug, data, kx=3, ky=3)

        def evaluate(s, theta):
            return spline.ev(np.asarray(s), np.mod(np.asarray(theta), TWO_PI))

        return evaluate
