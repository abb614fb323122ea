"""Simulation of quantum teleportation with Rydberg-blockaded neutral atoms.

Submodules
----------
qcore        states, operators, tensor products, partial trace, fidelity
model        Hamiltonians and dissipation channels
dynamics     unitary propagation, RK4 Lindblad integrator, closed-form gate solution
protocol     pair preparation, gate, Bell measurement, recovery, full teleport
experiments  parameter sweeps behind the population and fidelity curves
cli          ``rydsim`` command-line front end
"""

__version__ = "0.1.0"

from .qcore import (G0, G1, RYD, DensityOperator, LevelLabel, LinearOperator, PureState,
                    basis_state, embed, fidelity, partial_trace, tensor)
from .model import IntermediateStateSpec, JumpChannel, SystemSpec, h_epr, h_gate
from .dynamics import AnalyticRamanSolution, SolverError, propagate_lindblad, propagate_unitary
from .protocol import InputQubitSpec, PulseTimings, TeleportReport, teleport

__all__ = [
    "__version__", "G0", "G1", "RYD", "LevelLabel", "PureState", "LinearOperator", "DensityOperator",
    "basis_state", "embed", "fidelity", "partial_trace", "tensor",
    "SystemSpec", "IntermediateStateSpec", "JumpChannel", "h_epr", "h_gate",
    "AnalyticRamanSolution", "SolverError", "propagate_lindblad", "propagate_unitary",
    "InputQubitSpec", "PulseTimings", "TeleportReport", "teleport",
]
