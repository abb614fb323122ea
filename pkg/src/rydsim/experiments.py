"""Parameter sweeps that regenerate the population and fidelity curves.

All sweeps work in units of the Rabi frequency (``omega = 1``), so times are
the rescaled ``omega * t`` and rates are given as ratios to ``omega``.
Points are independent; with ``workers > 1`` they are evaluated in a process
pool and the records are sorted by coordinates afterwards, so serial and
parallel runs return identical lists.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .dynamics import propagate_lindblad, unitary_trajectory
from .model import IntermediateStateSpec, SystemSpec, decay_channels, h_gate
from .protocol import (InputQubitSpec, epr_first_peak, epr_state, epr_trajectory, find_peaks,
                       gate_benchmark_state, gate_fidelity, teleport)
from .qcore import PureState, basis_index

QUANTITIES = ("p00", "p_epr", "p_rr", "p10", "p0r", "p1r", "p_transfer", "p_blockade",
              "p_epr_peak", "gate_fidelity", "teleport_fidelity")
VALUE_ATOL = 1e-6

DEFAULT_POINTS = 400
FIG4_DELTA = tuple(np.linspace(0.0, 20.0, 41))
FIG4_GAMMA = tuple(np.linspace(0.0, 0.2, 41))
FIG6_DELTA = tuple(float(d) for d in range(5, 55, 5))
FIG6_GAMMA = (0.0, 0.005, 0.01, 0.02)
FIG5_PANELS = {"a": (10.0, 0.0), "b": (10.0, 0.02), "c": (5.0, 0.0), "d": (5.0, 0.02)}


@dataclass(frozen=True)
class SweepGrid:
    """Named axes and the observable evaluated at each grid point."""

    axes: dict
    quantity: str

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise ValueError(f"unknown quantity {self.quantity!r}")
        axes = {}
        for name, values in self.axes.items():
            vals = tuple(float(v) for v in values)
            if not vals:
                raise ValueError(f"axis {name!r} is empty")
            if not all(np.isfinite(vals)):
                raise ValueError(f"axis {name!r} has non-finite values")
            axes[name] = vals
        object.__setattr__(self, "axes", axes)

    def points(self) -> list[dict]:
        names = list(self.axes)
        return [dict(zip(names, combo)) for combo in itertools.product(*self.axes.values())]


@dataclass(frozen=True)
class SweepRecord:
    coordinates: dict
    values: dict

    def __post_init__(self):
        clean = {}
        for k, v in self.values.items():
            v = float(v)
            if not -VALUE_ATOL <= v <= 1 + VALUE_ATOL:
                raise ValueError(f"{k} = {v} outside [0, 1]")
            clean[k] = max(v, 0.0)
        object.__setattr__(self, "values", clean)

    def sort_key(self) -> tuple:
        return tuple(self.coordinates.values())

    def row(self) -> dict:
        return {**self.coordinates, **self.values}


def resolve_workers(workers: Optional[int] = None) -> int:
    """Worker count: explicit value, else available cores; ``RYDSIM_THREADS`` caps it."""
    n = workers if workers is not None else (os.cpu_count() or 1)
    cap = os.environ.get("RYDSIM_THREADS")
    if cap:
        n = min(n, int(cap))
    return max(1, int(n))


def run_points(fn: Callable[[dict], SweepRecord], points: Sequence[dict],
               workers: Optional[int] = 1) -> list[SweepRecord]:
    """Evaluate ``fn`` at each point and return records sorted by coordinates."""
    n = resolve_workers(workers)
    if n > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=min(n, len(points))) as pool:
            records = list(pool.map(fn, points))
    else:
        records = [fn(p) for p in points]
    return sorted(records, key=SweepRecord.sort_key)


def _idx(*labels) -> int:
    return basis_index(labels)


# ---------------------------------------------------------------- pair preparation

def fig3_populations(delta_over_omega: float, t_max_rescaled: float = 12.0,
                     n_points: int = DEFAULT_POINTS) -> list[SweepRecord]:
    """Lossless pair dynamics from ``|00>``: ``p00``, ``p_epr`` and ``p_rr`` against ``omega t``."""
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    spec = SystemSpec.from_ratios(1.0, delta_over_omega)
    times = np.linspace(0.0, t_max_rescaled, n_points)
    traj = epr_trajectory(spec, times, mode="unitary")
    epr = epr_state()
    out = []
    for t, psi in zip(times, traj.states):
        a = psi.amplitudes
        out.append(SweepRecord({"omega_t": float(t)},
                               {"p00": abs(a[_idx("g0", "g0")]) ** 2,
                                "p_epr": abs(epr.overlap(psi)) ** 2,
                                "p_rr": abs(a[_idx("ryd", "ryd")]) ** 2}))
    return out


def epr_peaks(records: Sequence[SweepRecord], quantity: str = "p_epr") -> list[tuple[float, float]]:
    """Refined local maxima ``(omega_t, value)`` of a time series."""
    t = [r.coordinates["omega_t"] for r in records]
    y = [r.values[quantity] for r in records]
    return find_peaks(t, y)


def _fig4_point(point: dict) -> SweepRecord:
    spec = SystemSpec.from_ratios(1.0, point["delta_over_omega"], point["gamma_over_omega"])
    _, value = epr_first_peak(spec, mode="lindblad")
    return SweepRecord(dict(point), {"p_epr_peak": min(value, 1.0)})


def fig4_surface(delta_grid: Iterable[float] = FIG4_DELTA, gamma_grid: Iterable[float] = FIG4_GAMMA,
                 workers: Optional[int] = 1) -> list[SweepRecord]:
    """First-peak pair population over blockade strength and decay rate."""
    grid = SweepGrid({"delta_over_omega": list(delta_grid), "gamma_over_omega": list(gamma_grid)},
                     "p_epr_peak")
    return run_points(_fig4_point, grid.points(), workers)


# ---------------------------------------------------------------- gate

def _gate_populations(spec: SystemSpec, psi0: PureState, times: np.ndarray):
    channels = decay_channels(spec, [0, 1], ("to_g0", "to_g1"))
    if spec.gamma_0r == 0 and spec.gamma_1r == 0:
        return unitary_trajectory(h_gate(spec), psi0, times)
    return propagate_lindblad(h_gate(spec), channels, psi0, times)


def fig5_disentangle(delta_over_omega: float, gamma_over_omega: float,
                     t_max_rescaled: float = 2 * np.pi, n_points: int = DEFAULT_POINTS) -> list[SweepRecord]:
    """Transfer ``|00> -> |10>`` and blockade survival of ``|0r>`` against ``omega t``."""
    spec = SystemSpec.from_ratios(1.0, delta_over_omega, gamma_over_omega)
    times = np.linspace(0.0, t_max_rescaled, n_points)
    transfer = _gate_populations(spec, PureState(np.eye(9)[_idx("g0", "g0")], 2), times)
    blockade = _gate_populations(spec, PureState(np.eye(9)[_idx("g0", "ryd")], 2), times)
    p10 = transfer.populations(_idx("g1", "g0"))
    p0r = blockade.populations(_idx("g0", "ryd"))
    return [SweepRecord({"omega_t": float(t)}, {"p_transfer": a, "p_blockade": b})
            for t, a, b in zip(times, p10, p0r)]


def fig6_populations(delta_over_omega: float = 50.0, gamma_over_omega: float = 0.0,
                     t_max_rescaled: float = 2 * np.pi, n_points: int = DEFAULT_POINTS) -> list[SweepRecord]:
    """Two-atom populations during the gate, starting from the gate-benchmark state."""
    spec = SystemSpec.from_ratios(1.0, delta_over_omega, gamma_over_omega)
    times = np.linspace(0.0, t_max_rescaled, n_points)
    traj = _gate_populations(spec, gate_benchmark_state(), times)
    cols = {"p00": ("g0", "g0"), "p10": ("g1", "g0"), "p0r": ("g0", "ryd"),
            "p1r": ("g1", "ryd"), "p_rr": ("ryd", "ryd")}
    series = {k: traj.populations(_idx(*lab)) for k, lab in cols.items()}
    return [SweepRecord({"omega_t": float(t)}, {k: v[i] for k, v in series.items()})
            for i, t in enumerate(times)]


def _fig6_point(point: dict) -> SweepRecord:
    spec = SystemSpec.from_ratios(1.0, point["delta_over_omega"], point["gamma_over_omega"])
    return SweepRecord(dict(point), {"gate_fidelity": gate_fidelity(spec)})


def fig6_gate_fidelity(delta_grid: Iterable[float] = FIG6_DELTA, gamma_list: Iterable[float] = FIG6_GAMMA,
                       workers: Optional[int] = 1) -> list[SweepRecord]:
    """Gate fidelity over blockade strength for several decay rates."""
    grid = SweepGrid({"delta_over_omega": list(delta_grid), "gamma_over_omega": list(gamma_list)},
                     "gate_fidelity")
    return run_points(_fig6_point, grid.points(), workers)


# ---------------------------------------------------------------- teleportation

def teleport_fidelity(spec: SystemSpec, qubit: Optional[InputQubitSpec] = None,
                      ispec: Optional[IntermediateStateSpec] = None, mode: str = "lindblad") -> float:
    """Branch-averaged fidelity for ``qubit``, or the six-state average when ``qubit`` is None."""
    if qubit is None:
        return teleport(InputQubitSpec.from_label("0"), spec, mode, ispec, average_axial=True).average_fidelity
    return teleport(qubit, spec, mode, ispec).fidelity


def robustness_sweep(base_spec: SystemSpec, delta_perturbation: float = 0.1,
                     qubit: Optional[InputQubitSpec] = None,
                     ispec: Optional[IntermediateStateSpec] = None) -> list[SweepRecord]:
    """Teleport fidelity with the blockade shift scaled by ``1 - p``, ``1``, ``1 + p``."""
    if not 0 <= delta_perturbation <= 0.5:
        raise ValueError("delta_perturbation must lie in [0, 0.5]")
    omega = base_spec.omega_0r
    factors = sorted({1 - delta_perturbation, 1.0, 1 + delta_perturbation})
    out = []
    for f in factors:
        spec = SystemSpec(base_spec.omega_0r, base_spec.omega_1r, base_spec.delta_r * f,
                          base_spec.gamma_0r, base_spec.gamma_1r)
        out.append(SweepRecord({"delta_over_omega": spec.delta_r / omega},
                               {"teleport_fidelity": teleport_fidelity(spec, qubit, ispec)}))
    return out


def spread(records: Sequence[SweepRecord], quantity: str = "teleport_fidelity") -> float:
    vals = [r.values[quantity] for r in records]
    return float(max(vals) - min(vals))
