# %% [markdown]
# # Conditional Raman transfer as a CNOT-like gate
#
# Atom 1 is driven on both `|0> <-> |r>` and `|1> <-> |r>`. If atom 2 sits in
# its ground state the two drives form a resonant Raman transfer that swaps
# `|0>` and `|1>`; if atom 2 is in `|r>`, the blockade detunes the
# intermediate level and the transfer is suppressed.

# %%
import numpy as np

from rydsim.dynamics import AnalyticRamanSolution, crosscheck_analytic
from rydsim.experiments import fig5_disentangle, fig6_gate_fidelity, fig6_populations
from rydsim.model import SystemSpec
from rydsim.protocol import gate_duration

# %% [markdown]
# The closed form for the blocked branch agrees with direct propagation.
# Its Rabi frequency is twice the drive element of the Hamiltonian.

# %%
spec = SystemSpec(0.5, 0.5, 10.0)
period = 2 * np.pi / AnalyticRamanSolution.from_spec(spec).omega_prime
print("closed form vs numerics, worst infidelity:", crosscheck_analytic(spec, np.linspace(0, period, 200)))

# %% [markdown]
# Transfer and blockade curves in units of the drive, with and without decay.

# %%
t_gate = gate_duration(SystemSpec.from_ratios(1.0, 10.0))
for delta, gamma in [(10.0, 0.0), (10.0, 0.02), (5.0, 0.0), (5.0, 0.02)]:
    recs = fig5_disentangle(delta, gamma, t_max_rescaled=t_gate, n_points=2)
    end = recs[-1].values
    print(f"delta={delta:4g} gamma={gamma:5g}: P(|10>)={end['p_transfer']:.4f}  P(|0r>)={end['p_blockade']:.4f}")

# %% [markdown]
# Populations from the benchmark input `(|0> + sqrt2 |1>)/sqrt3 (x) (|0> + |r>)/sqrt2`
# at `delta_r = 50 omega`, and the gate fidelity across blockade strengths.

# %%
pops = fig6_populations(50.0, 0.0)
print("max P_rr during the gate:", max(r.values["p_rr"] for r in pops))
for r in fig6_gate_fidelity(delta_grid=[10.0, 20.0, 50.0], gamma_list=[0.0, 0.01]):
    print(r.coordinates, f"F = {r.values['gate_fidelity']:.4f}")
