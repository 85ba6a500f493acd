"""
Shooting: the transition matrix and rho(z)
==========================================

For ``z = lam + i s`` we integrate ``l_lam u + i s u = 0`` from ``x = 0``
with a vanishing ``(m-1)``-jet and collect the terminal jets into ``R_z``.
For the classical problem ``R_z = sinh(k)/k`` with ``k^2 = i s - lam^2 c``,
so ``rho`` vanishes exactly at the conjugate instants ``lam = 0.4, 0.8``.
"""

import numpy as np

from sturmflow import rho, transition
from sturmflow.corpus import p1, p4

c = (2.5 * np.pi) ** 2
for lam in (0.3, 0.4, 0.6, 0.8):
    t = transition(p1(), lam)
    k = lam * np.sqrt(c)
    print(f"lam={lam:.1f}  R={t.R[0, 0].real:+.3e}  closed form {np.sin(k) / k:+.3e}")

# Off the real axis rho never vanishes
for z in (0.4 + 0.5j, 0.4 - 0.5j):
    L, phase = rho(p1(), z)
    print(f"z={z}  log|rho|={L:.4f}  arg rho={phase:+.4f}")

# The clamped fourth-order problem has a 2 x 2 transition matrix
t = transition(p4(), 0.5)
print("P4 R at lam = 0.5:\n", np.round(t.R.real, 6))
