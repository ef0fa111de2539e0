"""DtN spectra on a disk, a ball and a star-shaped curve.

On the unit disk the eigenvalues are 0, 1, 1, 2, 2, ... and on the unit
ball each degree l appears 2l + 1 times. The finite-difference path on a
perturbed disk keeps the zero eigenvalue and roughly the same growth.
A log-log fit of lambda_k against k gives the exponent 1 / (d - 1).
"""

import numpy as np

from dtnlab import Circle, Sphere, StarShaped2D, assemble_dtn, spectrum, weyl_fit

from _common import figure

disk = spectrum(assemble_dtn(Circle(1.0), resolution=64))
ball = spectrum(assemble_dtn(Sphere(1.0), resolution=16))
star = spectrum(assemble_dtn(StarShaped2D.from_coeffs([1.0, 0.0, 0.0, 0.15]), resolution=32))

print("disk, first eigenvalues:", np.round(disk.eigenvalues[:7], 6))
print("ball, first eigenvalues:", np.round(ball.eigenvalues[:10], 6))
print("star, first eigenvalues:", np.round(star.eigenvalues[:7], 4))

for name, sp, d in (("disk", disk, 2), ("ball", ball, 3), ("star", star, 2)):
    fit = weyl_fit(sp, d)
    print(f"{name}: fitted exponent {fit.exponent:.3f} (expected {1 / (d - 1):.3f})")


def draw(ax):
    for name, sp in (("disk", disk), ("ball", ball), ("star", star)):
        lam = sp.eigenvalues
        k = np.arange(1, lam.size + 1)
        ax.loglog(k[1:], lam[1:], ".", ms=3, label=name)
    ax.set_xlabel("k")
    ax.set_ylabel("lambda_k")
    ax.legend()


figure("spectra", draw)
