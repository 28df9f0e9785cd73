"""
Ground states and the Kerr null of the shunted ring
====================================================

The four-junction ring with linear shunts has a single ground state once the
shunts are stiff enough, and its fourth-order (Kerr) terms all vanish at one
flux bias. This script walks through both facts.
"""

import numpy as np

from jrmamp import JrmParams
from jrmamp.ground_state import degeneracy_class
from jrmamp.kerr import kerr_tensor, null_flux, null_trajectory

# %%
# Weak shunts leave several degenerate minima at half a flux quantum per
# loop (2 pi total); above beta = 1 the ground state is unique.
for beta in (0.5, 0.9, 1.1, 4.5):
    n = degeneracy_class(JrmParams(beta=beta), 2 * np.pi)
    print(f"beta = {beta:3.1f}: {n} ground state(s) at flux 2 pi")

# %%
# Without stray inductance the segment energy is -cos, whose fourth
# derivative vanishes at a quarter-loop phase of pi/2, i.e. total flux 2 pi.
params = JrmParams(beta=4.5)
pt = null_flux(params)
print(f"\nnull flux: {pt.phi_star / np.pi:.12f} pi (stable: {pt.stable})")
for flux in (0.0, np.pi, pt.phi_star):
    kt = kerr_tensor(params, flux)
    print(f"flux {flux / np.pi:5.3f} pi: K_aa = {kt.k_aa:+.3e}, K_ab = {kt.k_ab:+.3e} (ratio {kt.k_ab / kt.k_aa:.1f})")

# %%
# Stray arm inductance (alpha) pushes the null to larger flux until it runs
# into the region where the ground state is degenerate again.
tr = null_trajectory(4.5, np.round(np.arange(0.0, 0.61, 0.05), 10), n_seeds=128)
for a, p, s in tr.rows():
    print(f"alpha = {a:4.2f}: null at {p / np.pi:6.4f} pi, {'stable' if s else 'degenerate'}")
print(f"null leaves the stable region at alpha = {tr.critical_alpha:.2f}")
