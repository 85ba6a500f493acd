"""
Comparison of ordered forms
===========================

Lowering a form pointwise can only raise its Morse index. We check the
order through the jet coefficient block and compare the two indices.
"""

import numpy as np

from sturmflow import FormPair, check_order, compare_indices
from sturmflow.corpus import classical, monotone_suite, p3

upper, lower = classical((2.5 * np.pi) ** 2), classical((3.5 * np.pi) ** 2)
print("upper <= lower:", check_order(FormPair(upper, lower)).ordered)
print("lower <= upper:", check_order(FormPair(lower, upper)).ordered)
print(compare_indices(FormPair(upper, lower)))

# An indefinite leading term gives a negative index
print(compare_indices(FormPair(p3(), p3((0.5 * np.pi) ** 2))))

# Random forms paired with form + t P for a PSD constant P
results = [compare_indices(FormPair(hi, lo)) for hi, lo in monotone_suite(seed=1, count=5)]
print("pairs:", [(r.mu0, r.mu1) for r in results])
print("all satisfied:", all(r.satisfied for r in results))
