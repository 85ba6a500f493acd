"""
Morse index by spectral flow
============================

The Galerkin matrices ``Q(lam)`` of the rescaled forms are a polynomial
pencil in ``lam``. The Morse index is ``n_-(Q(1)) - n_-(Q(0))``. Every
change of ``n_-`` is bisected into a crossing whose crossing form has a
signature, and minus the sum of the signatures must give the same index.
"""

import numpy as np

from sturmflow import GalerkinBasis, HermitianPencil, morse_index, spectral_flow
from sturmflow.corpus import doubled_p1, p2, p4

for name, form in (("P2", p2()), ("P4", p4()), ("doubled P1", doubled_p1())):
    r = morse_index(form)
    rows = ", ".join(f"{c.lam:.9f} (dim {c.kernel_dim}, sig {c.signature:+d})" for c in r.crossings)
    print(f"{name}: mu_Mor = {r.mu}, identity {r.identity_ok}; crossings {rows}")

# Refining the basis leaves the index alone
print("P4 with N = 48:", morse_index(p4(), GalerkinBasis(2, 1, 48)).mu)

# A non-regular crossing: Q = (lam - 1/2)^3 has a vanishing crossing form.
# The pencil is shifted by delta times the Gram matrix to make it regular.
terms = {e: np.array([[c + 0j]]) for e, c in enumerate([-0.125, 0.75, -1.5, 1.0])}
r = spectral_flow(HermitianPencil(terms, np.eye(1)))
c = r.crossings[0]
print(f"cubic crossing at {c.lam:.6f}: regular {c.regular}, delta {c.delta_used:g}, signature {c.signature:+d}, mu {r.mu}")
