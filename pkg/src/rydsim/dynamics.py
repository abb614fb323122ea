"""Time evolution: exact unitary propagation, a fixed-step RK4 Lindblad
integrator and the closed-form Raman solution for the blockaded gate."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy import sparse
from scipy.linalg import expm

from .model import JumpChannel, SystemSpec, h_gate
from .qcore import (TRACE_ATOL, EIGENVALUE_FLOOR, DensityOperator, DimensionError, LinearOperator,
                    PureState, State, as_density)

STEPS_PER_PERIOD = 50
MAX_STEPS = 5_000_000


class SolverError(RuntimeError):
    """The integrator cannot continue or produced an unphysical state."""


@dataclass(frozen=True)
class EvolutionResult:
    times: np.ndarray
    states: list
    step: float = 0.0

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)

    @property
    def final(self):
        return self.states[-1]

    def populations(self, index: int) -> np.ndarray:
        """Population of basis state ``index`` at every sampled time."""
        out = []
        for s in self.states:
            if isinstance(s, PureState):
                out.append(abs(s.amplitudes[index]) ** 2)
            else:
                out.append(s.matrix[index, index].real)
        return np.array(out)


def _check_hamiltonian(h: LinearOperator, dim: int) -> np.ndarray:
    if h.dim != dim:
        raise DimensionError(f"Hamiltonian is {h.dim}-dimensional, state is {dim}-dimensional")
    m = np.asarray(h.matrix)
    if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-9:
        raise ValueError("Hamiltonian is not Hermitian")
    return m


def unitary(h: LinearOperator, t: float) -> np.ndarray:
    """``exp(-i h t)`` from the eigendecomposition of the Hermitian ``h``."""
    w, v = np.linalg.eigh(np.asarray(h.matrix))
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def propagate_unitary(h: LinearOperator, psi0: State, t: float) -> State:
    """Apply ``exp(-i h t)`` to a pure state or (as ``U rho U^dag``) to a density operator."""
    _check_hamiltonian(h, psi0.dim)
    u = unitary(h, t)
    if isinstance(psi0, PureState):
        return PureState(u @ psi0.amplitudes, psi0.n_atoms, psi0.levels)
    return DensityOperator(u @ psi0.matrix @ u.conj().T, psi0.n_atoms, psi0.levels, check=False)


def unitary_trajectory(h: LinearOperator, psi0: PureState, times: Sequence[float]) -> EvolutionResult:
    """Pure-state trajectory sampled at ``times`` with a single diagonalization."""
    _check_hamiltonian(h, psi0.dim)
    w, v = np.linalg.eigh(np.asarray(h.matrix))
    c0 = v.conj().T @ psi0.amplitudes
    states = [PureState(v @ (np.exp(-1j * w * t) * c0), psi0.n_atoms, psi0.levels) for t in times]
    return EvolutionResult(np.asarray(times, dtype=float), states)


def default_step(h: LinearOperator, channels: Sequence[JumpChannel], t_total: float) -> float:
    """Largest RK4 step: 1/50 of the period of the fastest scale in the problem."""
    scale = float(np.max(np.abs(h.matrix), initial=0.0))
    for ch in channels:
        scale = max(scale, ch.rate)
    if t_total > 0:
        scale = max(scale, 1.0 / t_total)
    if scale == 0:
        return np.inf
    return (2 * np.pi / STEPS_PER_PERIOD) / scale


class _Lindbladian:
    """Lindblad generator split as ``L rho = -i(H_eff rho - rho H_eff^dag) + J(rho)``.

    ``H_eff = H - (i/2) sum_k g_k L_k^dag L_k`` and ``J(rho) = sum_k g_k L_k rho L_k^dag``.
    The jump term is a sparse superoperator on the row-major ``vec(rho)``.
    """

    def __init__(self, h: np.ndarray, channels: Sequence[JumpChannel]):
        d = h.shape[0]
        h_eff = np.array(h, dtype=complex)
        jump = sparse.csr_matrix((d * d, d * d), dtype=complex)
        for c in channels:
            if c.rate > 0:
                j = np.sqrt(c.rate) * np.asarray(c.operator.matrix)
                h_eff = h_eff - 0.5j * (j.conj().T @ j)
                sj = sparse.csr_matrix(j)
                jump = jump + sparse.kron(sj, sj.conj())
        self.dim = d
        self.h_eff = h_eff
        self.jump = jump.tocsr()
        self._propagators = {}

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        d = self.dim
        drift = -1j * (self.h_eff @ rho - rho @ self.h_eff.conj().T)
        return drift + (self.jump @ rho.reshape(d * d)).reshape(d, d)

    def rk4(self, rho: np.ndarray, dt: float, n: int) -> np.ndarray:
        """``n`` integrating-factor RK4 steps of length ``dt``.

        Classical RK4 applied in the frame of the no-jump propagator
        ``G(t) = exp(-i H_eff t)``, which is applied exactly. Every stage is a
        positive combination of completely positive maps, so positivity is
        kept by construction; with no active channel the step is exact.
        """
        d = self.dim
        if dt not in self._propagators:
            g = expm(-0.5j * dt * self.h_eff)
            g2 = g @ g
            self._propagators[dt] = (g, g.conj().T, g2, g2.conj().T)
        g, gd, g2, g2d = self._propagators[dt]

        def half(x):
            return g @ x @ gd

        def jump(x):
            return (self.jump @ x.reshape(d * d)).reshape(d, d)

        h2, h6 = 0.5 * dt, dt / 6.0
        for _ in range(n):
            k1 = jump(rho)
            y_half = half(rho)
            a = half(rho + h2 * k1)
            k2 = jump(a)
            b = y_half + h2 * k2
            k3 = jump(b)
            c = half(y_half + dt * k3)
            k4 = jump(c)
            rho = g2 @ (rho + h6 * k1) @ g2d + h6 * (2 * half(k2 + k3) + k4)
        return rho


def _diagnose(rho: np.ndarray, t: float) -> None:
    tr = np.trace(rho)
    if abs(tr - 1) > TRACE_ATOL:
        raise SolverError(f"trace drifted to {tr.real:.9f} at t={t:.6e}")
    lowest = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lowest < EIGENVALUE_FLOOR:
        raise SolverError(f"density operator lost positivity (eigenvalue {lowest:.3e}) at t={t:.6e}")


def propagate_lindblad(h: LinearOperator, channels: Sequence[JumpChannel], rho0: State,
                       t_grid: Union[Sequence[float], np.ndarray], max_step: float | None = None,
                       check: bool = True) -> EvolutionResult:
    """Integrate the Lindblad master equation with fixed-step integrating-factor RK4.

    Each interval between consecutive grid times is split into equal steps no
    longer than ``max_step`` (default from :func:`default_step`), so every
    requested time is hit exactly. With ``check`` the trace and positivity of
    each sample are verified and a :class:`SolverError` raised on drift; the
    state is never renormalized.
    """
    rho0 = as_density(rho0)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ValueError("t_grid must be a nonempty 1-d sequence")
    if t_grid[0] < 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must start at or after 0 and increase strictly")
    hm = _check_hamiltonian(h, rho0.dim)
    for ch in channels:
        if ch.operator.dim != rho0.dim:
            raise DimensionError("jump operator dimension does not match the state")
    step = max_step if max_step is not None else default_step(h, channels, float(t_grid[-1]))
    if not step > 0:
        raise SolverError(f"step size underflow ({step})")
    rhs = _Lindbladian(hm, channels)
    rho = np.array(rho0.matrix, dtype=complex)
    states, t_prev, used = [], 0.0, 0.0
    for t in t_grid:
        span = t - t_prev
        if span > 0:
            n = int(np.ceil(span / step - 1e-9))
            if n > MAX_STEPS:
                raise SolverError(f"step size underflow: {n} steps needed for span {span:.3e}")
            dt = span / n
            used = max(used, dt)
            rho = rhs.rk4(rho, dt, n)
        if check:
            _diagnose(rho, t)
        states.append(DensityOperator(rho, rho0.n_atoms, rho0.levels, check=False))
        t_prev = t
    return EvolutionResult(t_grid, states, used)


def evolve(h: LinearOperator, channels: Sequence[JumpChannel], rho0: State, t: float,
           max_step: float | None = None) -> DensityOperator:
    """Density operator after time ``t``; exact propagation when no channel is active."""
    rho0 = as_density(rho0)
    if t == 0:
        return rho0
    if not any(c.rate > 0 for c in channels):
        return propagate_unitary(h, rho0, t)
    return propagate_lindblad(h, channels, rho0, [t], max_step=max_step).final


@dataclass(frozen=True)
class AnalyticRamanSolution:
    """Closed-form dynamics of the gate drive starting from ``|0>_1 |r>_2``.

    ``omega_01`` is the Raman-form Rabi frequency of the closed form, which
    is twice the drive strength used by :func:`rydsim.model.h_gate`; build it
    with :meth:`from_spec` when comparing against the numerical model.
    """

    omega_01: float
    delta_r: float
    omega_prime: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "omega_prime", float(np.sqrt(2 * self.omega_01**2 + self.delta_r**2)))

    @classmethod
    def from_spec(cls, spec: SystemSpec) -> "AnalyticRamanSolution":
        if spec.omega_0r != spec.omega_1r:
            raise ValueError("closed form requires equal couplings omega_0r == omega_1r")
        return cls(2 * spec.omega_0r, spec.delta_r)

    def amplitudes(self, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Amplitudes of ``|0 r>``, ``|1 r>`` and ``|r r>`` at time(s) ``t``."""
        t = np.asarray(t, dtype=float)
        wp, d = self.omega_prime, self.delta_r
        if wp == 0:
            return np.ones_like(t, dtype=complex), np.zeros_like(t, dtype=complex), np.zeros_like(t, dtype=complex)
        phase = np.exp(-0.5j * d * t)
        s = np.sin(0.5 * wp * t)
        bright = phase * (np.cos(0.5 * wp * t) + 1j * (d / wp) * s)
        c0r = 0.5 * (1 + bright)
        c1r = 0.5 * (bright - 1)
        crr = -1j * phase * (self.omega_01 / wp) * s
        return c0r, c1r, crr


def analytic_gate_evolution(sol: AnalyticRamanSolution, t: float) -> PureState:
    """Two-atom state at time ``t`` from the closed form (three nonzero amplitudes)."""
    c0r, c1r, crr = sol.amplitudes(t)
    v = np.zeros(9, dtype=complex)
    v[0 * 3 + 2], v[1 * 3 + 2], v[2 * 3 + 2] = c0r, c1r, crr
    return PureState(v, 2)


def dispersive_survival(omega_01: float, delta_r: float, t) -> np.ndarray:
    """Far-detuned approximation of the ``|0 r>`` survival probability,
    ``(1 + cos(omega_01**2 t / (2 delta_r))) / 2`` in closed-form units."""
    return 0.5 * (1 + np.cos(omega_01**2 * np.asarray(t, dtype=float) / (2 * delta_r)))


def crosscheck_analytic(spec: SystemSpec, t_grid: Sequence[float]) -> float:
    """Largest infidelity between closed form and exact propagation of ``h_gate``."""
    if spec.gamma_0r or spec.gamma_1r:
        raise ValueError("closed form only covers the lossless case")
    sol = AnalyticRamanSolution.from_spec(spec)
    v0 = np.zeros(9, dtype=complex)
    v0[2] = 1.0
    traj = unitary_trajectory(h_gate(spec), PureState(v0, 2), t_grid)
    worst = 0.0
    for t, psi in zip(traj.times, traj.states):
        ref = analytic_gate_evolution(sol, t)
        worst = max(worst, 1.0 - abs(ref.overlap(psi)) ** 2)
    return worst
