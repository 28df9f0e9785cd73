"""
Qubit readout and measurement efficiency
========================================

Readout through the amplifier is simulated shot by shot. Aligning the
amplified quadrature with the qubit information separates the two pointer
states; the orthogonal alignment instead kicks the qubit around the equator,
and the size of that kick reveals the measurement efficiency.
"""

import numpy as np

from jrmamp.measurement import (
    BlochState,
    ReadoutModel,
    backaction_experiment,
    count_lobes,
    fit_efficiency,
    jump_trace,
    projective_histogram,
    resolved_fraction,
)

plus = BlochState.plus_x()

# %%
# Histograms of 80,000 shots: two lobes when aligned, one when orthogonal.
for name, theta in (("optimal", 0.0), ("orthogonal", np.pi / 2)):
    h = projective_histogram(plus, ReadoutModel(2.5, alignment=theta), n_shots=80_000, seed=1)
    print(f"{name:10s} alignment: {count_lobes(h.i_rec, h.q_rec)} lobe(s)")

# %%
# Continuous monitoring of a decaying qubit shows resolved quantum jumps.
model = ReadoutModel(1.0, t1=10.0, gamma_up=0.05, integration_time=0.05)
tr = jump_trace(model, 7.5, 0.2, dt=0.01, seed=2)
print(f"\njump trace: {len(tr.true_jumps())} jump(s), resolved fraction {resolved_fraction(tr)}")

# %%
# Back-action tomography at orthogonal alignment, then an efficiency fit.
template = ReadoutModel(1.0, alignment=np.pi / 2)
for eta in (0.3, 0.55, 1.0):
    tomo = backaction_experiment(ReadoutModel(5.0, eta=eta, alignment=np.pi / 2), seed=2)
    fit = fit_efficiency(tomo, template)
    print(f"injected eta {eta:.2f}: recovered {fit.eta:.3f} +- {fit.stderr:.3f} (strength {fit.lam:.3f})")
