"""The semigroup exp(-t L) and its geometric form on the disk.

For gamma = I on a disk of radius R, exp(-t L) f is the harmonic extension
of f evaluated on the circle of radius exp(-t / R) R. Spectral calculus and
this geometric evaluation agree to rounding error. The trace norm
sum exp(-t lambda_k) is finite for every t > 0 and blows up like 2 / t.
"""

import numpy as np

from dtnlab import BoundaryFunction, Circle, assemble_dtn, evolve, lax_apply, spectrum, trace_norm

from _common import figure

sp = spectrum(assemble_dtn(Circle(1.0), resolution=256))
rng = np.random.default_rng(0)
f = BoundaryFunction(sp.grid, rng.standard_normal(sp.grid.dim) * np.exp(-0.3 * sp.grid.basis.degrees))

for t in (0.01, 0.1, 1.0):
    diff = (lax_apply(f, t) - evolve(sp, t, f)).norm()
    print(f"t={t:<5g} |Lax - spectral| = {diff:.2e}")

ts = np.geomspace(0.02, 3.0, 30)
tn = [trace_norm(sp, t) for t in ts]
for t, v in zip(ts[::6], tn[::6]):
    print(f"t={t:.3f} trace norm {v.value:.6f} (tail bound {v.tail_bound:.1e}, coth(t/2) = {1 / np.tanh(t / 2):.6f})")


def draw(ax):
    ax.loglog(ts, [v.value for v in tn], "o", ms=3, label="sum exp(-t lambda_k)")
    ax.loglog(ts, 1 / np.tanh(ts / 2), "-", label="coth(t/2)")
    ax.set_xlabel("t")
    ax.legend()


figure("trace_norm", draw)
