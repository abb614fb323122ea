"""Hamiltonians and dissipation channels for the blockade teleportation scheme.

Conventions: hbar = 1, all frequencies are angular (rad/s) and Rabi
frequencies are real and positive. A drive of strength ``omega`` on the
transition ``k <-> r`` enters as ``omega * |r><k| + h.c.``, so a resonant
single-atom pi pulse lasts ``pi / (2 * omega)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .qcore import (G0, G1, RYD, LevelLabel, LinearOperator, embed, embed_single_atom,
                    transition, zero_operator)


@dataclass(frozen=True)
class SystemSpec:
    """Physical parameters of the register.

    Attributes
    ----------
    omega_0r, omega_1r : float
        Rabi frequencies of the ``|0> <-> |r>`` and ``|1> <-> |r>`` drives (rad/s).
    delta_r : float
        Blockade shift of the doubly excited pair state (rad/s); any sign.
    gamma_0r, gamma_1r : float
        Spontaneous emission rates ``|r> -> |0>`` and ``|r> -> |1>`` (1/s).
    """

    omega_0r: float
    omega_1r: float
    delta_r: float
    gamma_0r: float = 0.0
    gamma_1r: float = 0.0

    def __post_init__(self):
        for name in ("omega_0r", "omega_1r", "delta_r", "gamma_0r", "gamma_1r"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)
        for name in ("omega_0r", "omega_1r", "gamma_0r", "gamma_1r"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")

    @classmethod
    def symmetric(cls, omega: float, delta_r: float, gamma: float = 0.0) -> "SystemSpec":
        """Equal couplings and equal decay rates for both ground states."""
        return cls(omega, omega, delta_r, gamma, gamma)

    @classmethod
    def from_ratios(cls, omega: float, delta_over_omega: float,
                    gamma_over_omega: float = 0.0) -> "SystemSpec":
        return cls.symmetric(omega, delta_over_omega * omega, gamma_over_omega * omega)

    @property
    def omega(self) -> float:
        """Common Rabi frequency, for specs built with equal couplings."""
        return self.omega_0r

    @property
    def gamma(self) -> float:
        return self.gamma_0r

    def without_decay(self) -> "SystemSpec":
        return SystemSpec(self.omega_0r, self.omega_1r, self.delta_r)

    def rate_scale(self) -> float:
        """Fastest frequency in the problem; sets the integrator step."""
        return max(abs(self.omega_0r), abs(self.omega_1r), abs(self.delta_r),
                   self.gamma_0r, self.gamma_1r)


@dataclass(frozen=True)
class IntermediateStateSpec:
    """Far-detuned intermediate level used for two-photon Rydberg excitation.

    ``gamma_p`` is its decay rate, ``delta_p`` the single-photon detuning and
    ``omega_laser`` the coupling of each excitation beam (angular units).
    """

    gamma_p: float
    delta_p: float
    omega_laser: float

    def __post_init__(self):
        if self.delta_p == 0:
            raise ValueError("delta_p must be nonzero")
        if self.gamma_p < 0:
            raise ValueError(f"gamma_p must be non-negative, got {self.gamma_p}")

    @property
    def scattering_rate(self) -> float:
        """Photon scattering rate per beam, ``gamma_p * (omega_laser / delta_p)**2``."""
        return self.gamma_p * (self.omega_laser / self.delta_p) ** 2

    @classmethod
    def rubidium_default(cls) -> "IntermediateStateSpec":
        """5p1/2 with 2pi x 3 MHz decay, 2pi x 1 GHz detuning, 2pi x 50 MHz beams."""
        two_pi = 2 * np.pi
        return cls(two_pi * 3e6, two_pi * 1e9, two_pi * 50e6)


@dataclass(frozen=True)
class JumpChannel:
    operator: LinearOperator
    rate: float

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError(f"jump rate must be non-negative, got {self.rate}")


def h_drive(atom: int, n_atoms: int, lower, upper, coupling: complex) -> LinearOperator:
    """``coupling * |upper><lower| + h.c.`` on one atom of the register."""
    op = transition(upper, lower) * coupling
    return embed_single_atom(op + op.dagger(), atom, n_atoms)


def h_blockade(atoms: Sequence[int], n_atoms: int, delta_r: float) -> LinearOperator:
    """Energy shift ``delta_r`` on the state with both listed atoms in ``|r>``."""
    rr = transition(RYD, RYD)
    pair = LinearOperator(np.kron(rr.matrix, rr.matrix), 2)
    out = embed(pair, atoms, n_atoms) * delta_r
    return LinearOperator(out.matrix, n_atoms, hermitian=True)


def _hermitian(op: LinearOperator) -> LinearOperator:
    return LinearOperator(op.matrix, op.n_atoms, op.levels, hermitian=True)


def h_epr(spec: SystemSpec, atoms: Sequence[int] = (0, 1), n_atoms: int = 2) -> LinearOperator:
    """Both atoms driven on ``|0> <-> |r>`` plus the blockade shift."""
    h = h_blockade(atoms, n_atoms, spec.delta_r)
    for a in atoms:
        h = h + h_drive(a, n_atoms, G0, RYD, spec.omega_0r)
    return _hermitian(h)


def epr_vector() -> np.ndarray:
    """``(|0 r> + |r 0>) / sqrt(2)`` on two atoms."""
    v = np.zeros(9, dtype=complex)
    v[3 * G0 + RYD] = v[3 * RYD + G0] = 1 / np.sqrt(2)
    return v


def h_epr_effective(spec: SystemSpec) -> LinearOperator:
    """Blockaded two-level model: ``sqrt(2) * omega_0r * (|EPR><00| + h.c.)``."""
    ket00 = np.zeros(9, dtype=complex)
    ket00[0] = 1.0
    m = np.sqrt(2) * spec.omega_0r * np.outer(epr_vector(), ket00)
    return LinearOperator(m + m.conj().T, 2, hermitian=True)


def h_gate(spec: SystemSpec, control: int = 0, target: int = 1, n_atoms: int = 2) -> LinearOperator:
    """Both ground states of ``control`` driven to ``|r>``; blockade with ``target``.

    The ``target`` atom is not driven; its Rydberg population only shifts the
    doubly excited level.
    """
    h = (h_drive(control, n_atoms, G0, RYD, spec.omega_0r)
         + h_drive(control, n_atoms, G1, RYD, spec.omega_1r)
         + h_blockade((control, target), n_atoms, spec.delta_r))
    return _hermitian(h)


_CHANNEL_LEVEL = {"to_g0": G0, "to_g1": G1}


def decay_channels(spec: SystemSpec, atoms: Iterable[int], channels: Iterable[str] = ("to_g0", "to_g1"),
                   n_atoms: int = 2) -> list[JumpChannel]:
    """Spontaneous emission ``|k><r|`` for each listed atom and final level ``k``."""
    rates = {"to_g0": spec.gamma_0r, "to_g1": spec.gamma_1r}
    out = []
    for a in atoms:
        if not 0 <= a < n_atoms:
            raise IndexError(f"atom {a} outside a register of {n_atoms}")
        for ch in channels:
            if ch not in _CHANNEL_LEVEL:
                raise ValueError(f"unknown decay channel {ch!r}")
            op = embed_single_atom(transition(_CHANNEL_LEVEL[ch], RYD), a, n_atoms)
            out.append(JumpChannel(op, rates[ch]))
    return out


def scattering_channels(ispec: IntermediateStateSpec, atoms: Iterable[int], n_atoms: int,
                        driven: Iterable = (G0,)) -> list[JumpChannel]:
    """Intermediate-state photon scattering for atoms under a two-photon drive.

    The far-detuned level is eliminated adiabatically. For every driven
    ground state ``k`` of every listed atom the rate ``gamma_sc`` is split
    equally between a decay ``|k><r|`` back to the driven ground state and a
    dephasing ``|k><k|`` on it.
    """
    half = 0.5 * ispec.scattering_rate
    out = []
    for a in atoms:
        for k in driven:
            k = LevelLabel.parse(k)
            out.append(JumpChannel(embed_single_atom(transition(k, RYD), a, n_atoms), half))
            out.append(JumpChannel(embed_single_atom(transition(k, k), a, n_atoms), half))
    return out


def zero_hamiltonian(n_atoms: int) -> LinearOperator:
    return zero_operator(n_atoms)
