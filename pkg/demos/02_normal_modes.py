"""
Normal modes of the ring
========================

Linearising around the ground state gives three oscillating modes (a, b, c)
and a zero-frequency common mode. Their frequencies follow simple closed forms.
"""

import numpy as np

from jrmamp import JrmParams
from jrmamp.eigenmodes import CapacitanceSet, closed_form_frequencies, eigenmodes, mode_frequencies_vs_flux

params = JrmParams(beta=4.5, alpha=0.1)
caps = CapacitanceSet(1.0, 1.0, 2.5, 2.5)

# %%
# Numeric eigenproblem against the closed forms at one bias point.
res = eigenmodes(params, caps, 1.0)
cf = closed_form_frequencies(params, caps, 1.0)
for lab in "0abc":
    print(f"mode {lab}: numeric {res.omega(lab):.12f}, closed form {cf.get(lab, 0.0):.12f}")
    print("   vector", np.round(res.vector(lab), 6))
print(f"c-mode participation: lambda1 = {res.lambda1:.4f}, lambda2 = {res.lambda2:.4f}")

# %%
# Mode frequencies fall as flux weakens the junctions; the shunt keeps them finite.
curves = mode_frequencies_vs_flux(params, caps, np.linspace(0, 2 * np.pi, 5))
for row in curves.rows():
    print("flux {:5.3f}: a {:.4f}  b {:.4f}  c {:.4f}".format(*row))
