"""
Conjugate index by winding number
=================================

The conjugate index is ``SIGMA`` times the winding of ``rho`` around the
rectangle ``(0, 1) x (-1, 1)``. Small squares around the real axis then
localize each conjugate instant together with its local degree.
"""

from sturmflow import conjugate_index, localize_instants, trace_contour
from sturmflow.corpus import p1, p2, p3

for name, form in (("P1", p1()), ("P2", p2()), ("P3", p3())):
    print(f"{name}: mu_con = {conjugate_index(form)}")

contour = trace_contour(p2())
print(f"P2 contour: {contour.z.size} samples, winding {contour.winding}")

for inst in localize_instants(p2(), tol=1e-8):
    print(f"instant {inst.lam:.9f}  local degree {inst.degree:+d}")
