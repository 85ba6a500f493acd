"""
Hermitian forms and their Euler-Lagrange operator
=================================================

A form is a matrix of matrix polynomials ``omega[i, j]`` acting on the
``m``-jet of a vector function. Here we build the classical form
``|u'|^2 - c|u|^2``, check it, rescale it to ``[0, lam]`` and read off the
operator ``l u = -u'' - c u``.
"""

import numpy as np

from sturmflow import HermitianForm, euler_lagrange, rescale, validate_form
from sturmflow.poly_forms import sesquilinear, weak_form_residual

c = (2.5 * np.pi) ** 2
form = HermitianForm.build(1, 1, 0, {(0, 0): [-c]})
print("violations:", validate_form(form))

# A bad leading coefficient is reported, not raised
bad = HermitianForm.build(1, 1, 0, {(0, 0): [-c], (1, 1): [2.0]})
print("violations of the bad form:", validate_form(bad))

# Rescaling multiplies entry (i, j) by lam^(2m-i-j) and substitutes lam x
half = rescale(form, 0.5)
print("omega_00 at lam = 1/2:", half.entry(0, 0).coeffs[:, 0, 0].real)

op = euler_lagrange(form)
print("p_2, p_1, p_0:", [float(p.coeffs[0, 0, 0].real) for p in op.p[::-1]])

# Integration by parts: q(u, v) equals int <v, l u> when v has a vanishing jet
u = np.array([[0.0], [1.0], [-1.0]])  # x (1 - x)
v = np.array([[0.0], [0.0], [1.0], [-1.0]])  # x^2 (1 - x)
print("q(u, v) =", sesquilinear(form, u, v).real)
print("weak-form residual:", weak_form_residual(form, u, v))
