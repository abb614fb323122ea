# %% [markdown]
# # Intermediate-state scattering and blockade fluctuations
#
# Two-photon excitation through a far-detuned level scatters photons at
# `gamma_p (omega_laser / delta_p)**2` per beam. Thermal motion changes the
# interatomic distance and hence the blockade shift.

# %%
import numpy as np

from rydsim.experiments import robustness_sweep, spread, teleport_fidelity
from rydsim.model import IntermediateStateSpec, SystemSpec

OMEGA = 2 * np.pi * 2.5e6
spec = SystemSpec.from_ratios(OMEGA, 20.0, 1e-3)
ispec = IntermediateStateSpec.rubidium_default()
print(f"scattering rate per beam: 2 pi x {ispec.scattering_rate / (2 * np.pi):.0f} Hz")

# %%
print("six-state fidelity without scattering:", round(teleport_fidelity(spec), 4))
print("six-state fidelity with scattering:   ", round(teleport_fidelity(spec, ispec=ispec), 4))

# %% [markdown]
# A +/-10 % change of the blockade shift barely moves the fidelity.

# %%
recs = robustness_sweep(spec, 0.1)
for r in recs:
    print(f"delta/omega = {r.coordinates['delta_over_omega']:g}: F = {r.values['teleport_fidelity']:.4f}")
print("spread:", round(spread(recs), 4))
