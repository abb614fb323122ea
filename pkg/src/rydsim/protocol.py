"""Teleportation with three blockade-coupled atoms.

Register layout: atom 0 carries the unknown qubit ``alpha|0> + beta|1>``,
atoms 1 and 2 share the entangled pair and atom 2 receives the state. The
qubit of atoms 1 and 2 lives on ``{|0>, |r>}``.

Pipeline::

    prepare_epr -> cnot_like_gate -> half_pi_pulse_q2 -> measure_bell -> recover_q3

Every stage accepts ``mode`` in ``{"ideal", "unitary", "lindblad"}``:
``ideal`` applies the exact target maps, ``unitary`` propagates the physical
Hamiltonians without loss and ``lindblad`` adds Rydberg decay (and
intermediate-state scattering when an :class:`IntermediateStateSpec` is
given).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .dynamics import evolve, propagate_lindblad, unitary_trajectory
from .model import (IntermediateStateSpec, JumpChannel, SystemSpec, decay_channels, epr_vector,
                    h_drive, h_epr, h_gate, scattering_channels)
from .qcore import (G0, G1, RYD, DensityOperator, LinearOperator, PureState, State, as_density,
                    embed, fidelity, partial_trace, pauli_on_subspace, tensor)

MODES = ("ideal", "unitary", "lindblad")
N_ATOMS = 3
SENDER, PAIR_A, RECEIVER = 0, 1, 2


def _mode(mode: str) -> str:
    mode = {"full_unitary": "unitary"}.get(mode, mode)
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    return mode


@dataclass(frozen=True)
class InputQubitSpec:
    alpha: complex
    beta: complex

    def __post_init__(self):
        a, b = complex(self.alpha), complex(self.beta)
        if abs(abs(a) ** 2 + abs(b) ** 2 - 1) > 1e-12:
            raise ValueError(f"|alpha|^2 + |beta|^2 = {abs(a) ** 2 + abs(b) ** 2!r}, expected 1")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    AXIAL = ("0", "1", "+", "-", "+i", "-i")

    @classmethod
    def from_label(cls, label: str) -> "InputQubitSpec":
        s = 1 / np.sqrt(2)
        table = {"0": (1, 0), "1": (0, 1), "+": (s, s), "-": (s, -s), "+i": (s, 1j * s), "-i": (s, -1j * s)}
        try:
            return cls(*table[label])
        except KeyError:
            raise ValueError(f"unknown input label {label!r}; expected one of {cls.AXIAL}") from None

    @classmethod
    def axial(cls) -> list["InputQubitSpec"]:
        """The six eigenstates of the Pauli operators."""
        return [cls.from_label(k) for k in cls.AXIAL]

    def state(self) -> PureState:
        return PureState([self.alpha, self.beta, 0], 1)


@dataclass(frozen=True)
class PulseTimings:
    """Nominal stage durations: pair preparation, gate plus pi/2 pulse, recovery."""

    t1: float
    t2: float
    t3: float

    @classmethod
    def from_omega(cls, omega: float) -> "PulseTimings":
        return cls(np.pi / (2 * np.sqrt(2) * omega),
                   np.sqrt(2) * np.pi / omega + np.pi / (4 * omega),
                   np.pi / omega)

    @property
    def total(self) -> float:
        return self.t1 + self.t2 + self.t3


def gate_duration(spec: SystemSpec) -> float:
    """Resonant Raman transfer time ``|00> -> |10>`` of :func:`h_gate` (a 2 pi bright-state rotation)."""
    return np.pi / np.hypot(spec.omega_0r, spec.omega_1r)


def half_pi_duration(spec: SystemSpec) -> float:
    return np.pi / (4 * spec.omega_0r)


# ---------------------------------------------------------------- channels

def _loss_channels(spec: SystemSpec, ispec: Optional[IntermediateStateSpec], n_atoms: int,
                   driven: dict, decay: Sequence[str] = ("to_g0", "to_g1"),
                   decaying: Optional[Sequence[int]] = None) -> list[JumpChannel]:
    """Rydberg decay on ``decaying`` atoms (default all) and scattering on driven ones.

    ``driven`` maps atom index to the ground states its drives couple.
    """
    atoms = range(n_atoms) if decaying is None else decaying
    out = decay_channels(spec, atoms, decay, n_atoms)
    if ispec is not None:
        for atom, grounds in driven.items():
            out += scattering_channels(ispec, [atom], n_atoms, grounds)
    return out


def _run(h: LinearOperator, rho: DensityOperator, t: float, mode: str,
         channels: list[JumpChannel]) -> DensityOperator:
    if mode == "unitary":
        channels = []
    return evolve(h, channels, rho, t)


def _apply(u: np.ndarray, rho: DensityOperator) -> DensityOperator:
    return DensityOperator(u @ rho.matrix @ u.conj().T, rho.n_atoms, rho.levels, check=False)


# ---------------------------------------------------------------- EPR pair

def epr_state() -> PureState:
    return PureState(epr_vector(), 2)


def epr_population(rho: State) -> float:
    return fidelity(epr_state(), rho)


def _local_maxima(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y)
    return np.nonzero((y[1:-1] >= y[:-2]) & (y[1:-1] > y[2:]))[0] + 1


def refine_peak(x: np.ndarray, y: np.ndarray, i: int) -> tuple[float, float]:
    """Vertex of the parabola through the three samples around index ``i``."""
    x0, x1, x2 = x[i - 1], x[i], x[i + 1]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
    if a >= 0:
        return float(x1), float(y1)
    xv = -b / (2 * a)
    c = y1 - a * x1**2 - b * x1
    return float(xv), float(a * xv**2 + b * xv + c)


def find_peaks(x, y) -> list[tuple[float, float]]:
    """All interior local maxima of sampled data, each refined parabolically."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return [refine_peak(x, y, i) for i in _local_maxima(y)]


def _epr_stage(spec: SystemSpec, ispec: Optional[IntermediateStateSpec], mode: str):
    h = h_epr(spec)
    channels = [] if mode == "unitary" else _loss_channels(
        spec, ispec, 2, {0: [G0], 1: [G0]}, decay=("to_g0",))
    return h, channels


def epr_trajectory(spec: SystemSpec, times, mode: str = "lindblad",
                   ispec: Optional[IntermediateStateSpec] = None):
    """Evolution of the pair from ``|00>`` sampled at ``times`` (starting at 0)."""
    mode = _mode(mode)
    h, channels = _epr_stage(spec, ispec, mode)
    psi0 = PureState(np.eye(9)[0], 2)
    if not any(c.rate > 0 for c in channels):
        return unitary_trajectory(h, psi0, times)
    return propagate_lindblad(h, channels, psi0, times)


def epr_first_peak(spec: SystemSpec, mode: str = "lindblad", ispec: Optional[IntermediateStateSpec] = None,
                   n_search: int = 400) -> tuple[float, float]:
    """Time and value of the first local maximum of the pair population."""
    horizon = 3 * PulseTimings.from_omega(spec.omega_0r).t1
    times = np.linspace(0.0, horizon, n_search)
    traj = epr_trajectory(spec, times, mode, ispec)
    p = np.array([epr_population(s) for s in traj.states])
    peaks = find_peaks(times, p)
    if not peaks:
        raise RuntimeError("no population maximum found within the search window")
    return peaks[0]


def prepare_epr(spec: SystemSpec, mode: str = "lindblad", ispec: Optional[IntermediateStateSpec] = None,
                n_search: int = 400) -> tuple[DensityOperator, float]:
    """Entangle atoms 1 and 2 from ``|00>``; returns the pair state and the elapsed time.

    ``ideal`` returns the exact pair state after the nominal ``t1``. The other
    modes stop at the first maximum of the pair population.
    """
    mode = _mode(mode)
    if mode == "ideal":
        return epr_state().to_density(), PulseTimings.from_omega(spec.omega_0r).t1
    t_peak, _ = epr_first_peak(spec, mode, ispec, n_search)
    h, channels = _epr_stage(spec, ispec, mode)
    rho = evolve(h, channels, PureState(np.eye(9)[0], 2), t_peak)
    return rho, t_peak


# ---------------------------------------------------------------- Bell decomposition

BELL_LABELS = ("phi+", "phi-", "psi+", "psi-")


def bell_vectors() -> dict[str, np.ndarray]:
    """Bell states of the sender/pair atoms over ``{|0>,|1>} x {|0>,|r>}``."""
    def k(a, b):
        v = np.zeros(9, dtype=complex)
        v[3 * a + b] = 1.0
        return v
    s = 1 / np.sqrt(2)
    return {"phi+": s * (k(G0, G0) + k(G1, RYD)), "phi-": s * (k(G0, G0) - k(G1, RYD)),
            "psi+": s * (k(G0, RYD) + k(G1, G0)), "psi-": s * (k(G0, RYD) - k(G1, G0))}


def bell_decompose(psi: PureState, atol: float = 1e-9) -> list[tuple[str, PureState]]:
    """Expand a three-atom state as ``sum_B |B> (x) c_B`` with unnormalized receiver states ``c_B``."""
    if psi.n_atoms != 3 or psi.levels != 3:
        raise ValueError("expected a three-atom, three-level state")
    amps = psi.amplitudes.reshape(9, 3)
    out, recon = [], np.zeros_like(amps)
    for label, b in bell_vectors().items():
        c = b.conj() @ amps
        recon += np.outer(b, c)
        out.append((label, PureState(c, 1)))
    residual = np.linalg.norm(amps - recon)
    if residual > atol:
        raise ValueError(f"state has weight {residual:.3e} outside the Bell subspace")
    return out


# ---------------------------------------------------------------- gate and pi/2 pulse

def cnot_matrix() -> np.ndarray:
    """Target map on two atoms: ``|0r>,|1r> -> -itself``, ``|00> <-> |10>``; identity elsewhere."""
    m = np.eye(9, dtype=complex)
    i00, i0r, i10, i1r = 3 * G0 + G0, 3 * G0 + RYD, 3 * G1 + G0, 3 * G1 + RYD
    m[i0r, i0r] = m[i1r, i1r] = -1
    m[i00, i00] = m[i10, i10] = 0
    m[i10, i00] = m[i00, i10] = 1
    return m


def cnot_like_gate(state: State, spec: Optional[SystemSpec] = None, mode: str = "ideal",
                   ispec: Optional[IntermediateStateSpec] = None,
                   control: int = 0, target: int = 1) -> DensityOperator:
    """Conditional Raman transfer of ``control``, blocked when ``target`` is in ``|r>``.

    Non-ideal modes drive :func:`h_gate` for :func:`gate_duration`; in
    ``lindblad`` mode every atom of the register decays.
    """
    mode = _mode(mode)
    rho = as_density(state)
    n = rho.n_atoms
    if mode == "ideal":
        u = embed(LinearOperator(cnot_matrix(), 2), [control, target], n).matrix
        return _apply(u, rho)
    h = embed(h_gate(spec), [control, target], n)
    channels = _loss_channels(spec, ispec, n, {control: [G0, G1]})
    return _run(h, rho, gate_duration(spec), mode, channels)


def half_pi_matrix() -> np.ndarray:
    """Real rotation on ``{|0>, |r>}``: ``(|0>+|r>)/sqrt2 -> |0>``, ``(|0>-|r>)/sqrt2 -> -|r>``."""
    s = 1 / np.sqrt(2)
    m = np.eye(3, dtype=complex)
    m[np.ix_([G0, RYD], [G0, RYD])] = [[s, s], [-s, s]]
    return m


def _half_pi_hamiltonian(spec: SystemSpec, atom: int, n: int) -> LinearOperator:
    # phase -i on |r><0| makes exp(-iHt) at t = pi/(4 omega) equal half_pi_matrix
    return h_drive(atom, n, G0, RYD, -1j * spec.omega_0r)


def half_pi_pulse_q2(state: State, spec: Optional[SystemSpec] = None, mode: str = "ideal",
                     ispec: Optional[IntermediateStateSpec] = None, atom: int = PAIR_A) -> DensityOperator:
    """pi/2 rotation of the pair atom that maps the disentangled Bell states onto basis states."""
    mode = _mode(mode)
    rho = as_density(state)
    n = rho.n_atoms
    if mode == "ideal":
        return _apply(embed(LinearOperator(half_pi_matrix(), 1), [atom], n).matrix, rho)
    h = _half_pi_hamiltonian(spec, atom, n)
    channels = _loss_channels(spec, ispec, n, {atom: [G0]})
    return _run(h, rho, half_pi_duration(spec), mode, channels)


# ---------------------------------------------------------------- measurement

RECOVERY = {("g1", "ryd"): "sigma_x", ("g1", "g0"): "sigma_y",
            ("g0", "ryd"): "identity", ("g0", "g0"): "sigma_z"}


@dataclass(frozen=True)
class BranchOutcome:
    """One classical outcome of the joint detection of the sender and pair atoms."""

    outcome_q1: str
    outcome_q2: str
    probability: float
    post_state_q3: Optional[DensityOperator]
    recovery: str
    branch_fidelity: float = float("nan")
    recovered: Optional[DensityOperator] = field(default=None, repr=False, compare=False)


def _detection_projectors() -> tuple[dict, dict]:
    # sender: fluorescence on |1> vs. everything else; pair atom: |0> vs. everything else
    p1 = np.diag([0, 1, 0]).astype(complex)
    p0 = np.diag([1, 0, 0]).astype(complex)
    eye = np.eye(3)
    return {"g1": p1, "g0": eye - p1}, {"g0": p0, "ryd": eye - p0}


def measure_bell(state: State, prob_atol: float = 1e-6) -> list[BranchOutcome]:
    """All four detection outcomes with Born probabilities and receiver states.

    The sender reads ``g1`` iff found in ``|1>``; the pair atom reads ``g0``
    iff found in ``|0>``. Stray population outside the qubit levels therefore
    lands in a definite outcome and the probabilities always sum to one.
    """
    rho = as_density(state)
    if rho.n_atoms != 3:
        raise ValueError("measurement expects the three-atom register")
    q1s, q2s = _detection_projectors()
    out = []
    total = 0.0
    for (o1, o2), rec in RECOVERY.items():
        proj = np.kron(np.kron(q1s[o1], q2s[o2]), np.eye(3))
        branch = proj @ rho.matrix @ proj
        p = float(np.trace(branch).real)
        total += p
        post = None
        if p > 1e-14:
            red = partial_trace(DensityOperator(branch / p, 3, check=False), [RECEIVER])
            post = DensityOperator(0.5 * (red.matrix + red.matrix.conj().T), 1, check=False)
        out.append(BranchOutcome(o1, o2, p, post, rec))
    if abs(total - 1) > prob_atol:
        raise ValueError(f"branch probabilities sum to {total:.9f}")
    return out


def sample_bell(state: State, seed: Optional[int] = None) -> BranchOutcome:
    """Draw one outcome from :func:`measure_bell` with a seeded generator."""
    branches = measure_bell(state)
    return sample_branch(branches, np.random.default_rng(seed))


def sample_branch(branches: Sequence[BranchOutcome], rng: np.random.Generator) -> BranchOutcome:
    p = np.array([max(b.probability, 0.0) for b in branches])
    return branches[int(rng.choice(len(branches), p=p / p.sum()))]


# ---------------------------------------------------------------- recovery

def _mapping_matrix() -> np.ndarray:
    """``|r> -> |1>``, ``|1> -> -|r>``; the pi pulse that returns the qubit to the ground states."""
    m = np.eye(3, dtype=complex)
    m[np.ix_([G1, RYD], [G1, RYD])] = [[0, 1], [-1, 0]]
    return m


def recovery_pulses(recovery: str, spec: SystemSpec) -> list[tuple[LinearOperator, float, list]]:
    """Square pulses (single-atom Hamiltonian, duration, driven ground states).

    The Pauli correction acts on ``{|0>, |r>}``: a pi pulse on ``0 <-> r`` for
    ``sigma_x`` and ``sigma_y`` (different laser phase), a 2 pi pulse on
    ``r <-> 1`` for ``sigma_z``. A final pi pulse maps ``|r>`` to ``|1>``.
    """
    w0, w1 = spec.omega_0r, spec.omega_1r
    pulses = {
        "sigma_x": [(h_drive(0, 1, G0, RYD, w0), np.pi / (2 * w0), [G0])],
        "sigma_y": [(h_drive(0, 1, G0, RYD, 1j * w0), np.pi / (2 * w0), [G0])],
        "sigma_z": [(h_drive(0, 1, G1, RYD, w1), np.pi / w1, [G1])],
        "identity": [],
    }
    if recovery not in pulses:
        raise ValueError(f"unknown recovery {recovery!r}")
    # drive |1> <- |r> with phase so that |r> -> +|1>
    mapping = (h_drive(0, 1, RYD, G1, 1j * w1), np.pi / (2 * w1), [G1])
    return pulses[recovery] + [mapping]


def recovery_duration(recovery: str, spec: SystemSpec) -> float:
    return sum(t for _, t, _ in recovery_pulses(recovery, spec))


def recover_q3(branch: BranchOutcome, spec: Optional[SystemSpec] = None, mode: str = "ideal",
               ispec: Optional[IntermediateStateSpec] = None) -> DensityOperator:
    """Apply the outcome's Pauli correction and map ``|r>`` back to ``|1>``."""
    mode = _mode(mode)
    if branch.recovery not in ("sigma_x", "sigma_y", "sigma_z", "identity"):
        raise ValueError(f"unknown recovery {branch.recovery!r}")
    if branch.post_state_q3 is None:
        raise ValueError("branch has zero probability; nothing to recover")
    rho = branch.post_state_q3
    if mode == "ideal":
        u = _mapping_matrix() @ pauli_on_subspace(branch.recovery).matrix
        return _apply(u, rho)
    for h, t, grounds in recovery_pulses(branch.recovery, spec):
        channels = _loss_channels(spec, ispec, 1, {0: grounds})
        rho = _run(h, rho, t, mode, channels)
    return rho


# ---------------------------------------------------------------- full protocol

@dataclass(frozen=True)
class TeleportReport:
    qubit: InputQubitSpec
    mode: str
    branches: list
    fidelity: float
    timings: PulseTimings
    stage_times: dict
    axial_fidelities: Optional[dict] = None

    @property
    def total_time(self) -> float:
        """Nominal protocol duration ``t1 + t2 + t3``."""
        return self.timings.total

    @property
    def simulated_time(self) -> float:
        return sum(self.stage_times.values())

    @property
    def average_fidelity(self) -> Optional[float]:
        """Mean over the six axial inputs, equal to the Bloch-sphere average."""
        if self.axial_fidelities is None:
            return None
        return float(np.mean(list(self.axial_fidelities.values())))


def _after_epr(qubit: InputQubitSpec, epr: DensityOperator, spec, mode, ispec) -> list[BranchOutcome]:
    rho = tensor(qubit.state().to_density(), epr)
    rho = cnot_like_gate(rho, spec, mode, ispec)
    rho = half_pi_pulse_q2(rho, spec, mode, ispec)
    target = qubit.state()
    branches = []
    for b in measure_bell(rho):
        if b.post_state_q3 is None:
            branches.append(replace(b, branch_fidelity=0.0))
            continue
        rec = recover_q3(b, spec, mode, ispec)
        branches.append(replace(b, branch_fidelity=fidelity(target, rec), recovered=rec))
    return branches


def _weighted_fidelity(branches: Sequence[BranchOutcome]) -> float:
    return float(sum(b.probability * b.branch_fidelity for b in branches))


def teleport(qubit: InputQubitSpec, spec: SystemSpec, mode: str = "lindblad",
             ispec: Optional[IntermediateStateSpec] = None, average_axial: bool = False) -> TeleportReport:
    """Run the whole protocol and report per-branch and branch-averaged fidelities.

    With ``average_axial`` the six axial inputs are also teleported (sharing
    one pair preparation) and their fidelities stored on the report.
    """
    mode = _mode(mode)
    epr, t_epr = prepare_epr(spec, mode, ispec)
    branches = _after_epr(qubit, epr, spec, mode, ispec)
    axial = None
    if average_axial:
        axial = {lab: _weighted_fidelity(_after_epr(InputQubitSpec.from_label(lab), epr, spec, mode, ispec))
                 for lab in InputQubitSpec.AXIAL}
    recover_t = sum(b.probability * recovery_duration(b.recovery, spec) for b in branches)
    stage_times = {"epr": t_epr, "gate": gate_duration(spec), "half_pi": half_pi_duration(spec),
                   "recovery": recover_t}
    return TeleportReport(qubit, mode, branches, _weighted_fidelity(branches),
                          PulseTimings.from_omega(spec.omega_0r), stage_times, axial)


# ---------------------------------------------------------------- gate benchmark

def gate_benchmark_state() -> PureState:
    """``(|0> + sqrt2 |1>)/sqrt3 (x) (|0> + |r>)/sqrt2``."""
    q1 = np.array([1, np.sqrt(2), 0]) / np.sqrt(3)
    q2 = np.array([1, 0, 1]) / np.sqrt(2)
    return PureState(np.kron(q1, q2), 2)


def gate_fidelity(spec: SystemSpec, ispec: Optional[IntermediateStateSpec] = None,
                  psi0: Optional[PureState] = None) -> float:
    """``Tr(rho_ideal rho)`` after one lossy gate pulse from the benchmark state."""
    psi0 = gate_benchmark_state() if psi0 is None else psi0
    ideal = PureState(cnot_matrix() @ psi0.amplitudes, 2)
    return fidelity(ideal, cnot_like_gate(psi0, spec, "lindblad", ispec))
