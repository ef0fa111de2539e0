"""Diffusion through a partially absorbing membrane.

A source at concentration C0 on the outer circle r = R0 feeds a membrane
at r = R that absorbs at rate W. The membrane concentration solves
(I + mu L) u = 1 with mu = D / W, and the total flux is D C0 (L u, 1).
Only the constant mode matters for uniform data, which gives the closed
form 2 pi R D C0 lam0 / (1 + mu lam0) with lam0 = 1 / (R ln(R0 / R)).
Moving the source away (R0 -> infinity) lets the flux decay like 1 / ln R0
in the plane, while a spherical shell keeps a positive limit.
"""

import numpy as np

from dtnlab import Annulus, annulus_dtn
from dtnlab.transport import flux_sweep

from _common import figure

ann = Annulus(1.0, 3.0)
L = annulus_dtn(ann, resolution=32)
lam0 = 1.0 / np.log(3.0)
mus = np.geomspace(1e-3, 1e3, 25)
rows = flux_sweep(L, mus)
for mu, phi, umin, _ in rows[::4]:
    exact = 2 * np.pi * lam0 / (1 + mu * lam0)
    print(f"mu={mu:9.3g}  flux {phi:.6f}  closed form {exact:.6f}  membrane u {umin:.4f}")

print("source distance trend at mu = 1:")
for R0 in (2.0, 10.0, 1e2, 1e4, 1e8):
    plane = flux_sweep(annulus_dtn(Annulus(1.0, R0), resolution=8), [1.0])[0][1]
    shell = flux_sweep(annulus_dtn(Annulus(1.0, R0, dim=3), resolution=4), [1.0])[0][1]
    print(f"  R0={R0:8.0e}  plane {plane:.5f}  shell {shell:.5f}")


def draw(ax):
    ax.loglog(mus, [r[1] for r in rows], "o", ms=3, label="computed")
    ax.loglog(mus, 2 * np.pi * lam0 / (1 + mus * lam0), "-", label="closed form")
    ax.set_xlabel("mu = D / W")
    ax.set_ylabel("total flux")
    ax.legend()


figure("flux", draw)
