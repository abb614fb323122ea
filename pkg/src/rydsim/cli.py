"""Command-line front end: ``rydsim <command> [options]``.

Each run writes ``<command>.manifest.json`` followed by ``<command>.csv`` into
the output directory. Configuration comes from an optional JSON file with
``physics`` / ``run`` / ``output`` sections; flags override file values.

Frequencies in the file are ordinary MHz unless ``physics.angular`` is true,
so ``omega_mhz = 2.5`` means ``2 pi x 2.5e6 rad/s``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from .dynamics import SolverError, default_step
from .experiments import (FIG4_DELTA, FIG4_GAMMA, FIG6_DELTA, FIG6_GAMMA, DEFAULT_POINTS, epr_peaks,
                          fig3_populations, fig4_surface, fig5_disentangle, fig6_gate_fidelity,
                          fig6_populations, resolve_workers, robustness_sweep, spread)
from .model import IntermediateStateSpec, SystemSpec, decay_channels, h_epr, h_gate
from .protocol import (MODES, InputQubitSpec, PulseTimings, epr_first_peak, epr_trajectory, epr_population,
                       gate_duration, gate_fidelity, sample_branch, teleport)

COMMANDS = ("epr", "gate", "teleport", "fig3", "fig4", "fig5", "fig6", "robustness")

COLUMNS = {
    "epr": ("omega_t", "p00", "p_epr", "p_rr"),
    "gate": ("omega_t", "p00", "p10", "p0r", "p1r", "p_rr"),
    "teleport": ("q1", "q2", "probability", "branch_fidelity"),
    "fig3": ("omega_t", "p00", "p_epr", "p_rr"),
    "fig4": ("delta_over_omega", "gamma_over_omega", "p_epr_peak"),
    "fig5": ("omega_t", "p_transfer", "p_blockade"),
    "fig6": ("delta_over_omega", "gamma_over_omega", "gate_fidelity"),
    "robustness": ("delta_over_omega", "teleport_fidelity"),
}

CONVENTIONS = {
    "units": "hbar = 1; angular frequencies; time axes in units of 1/omega",
    "drive": "omega * |r><k| + h.c.; resonant pi pulse lasts pi / (2 omega)",
    "fidelity": "Tr(rho_ideal rho) against a pure target",
    "peak_rule": "first local maximum of the pair population, refined by a parabola through three samples",
    "averaging_rule": "branch fidelities weighted by Born probabilities; average_fidelity is the mean "
                      "over the six axial input states",
    "integrator": "fixed-step integrating-factor RK4 (exact no-jump propagator, RK4 on the jump term), 50 steps per period of the fastest scale",
}

SIG_DIGITS = 12


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending key path."""


# ---------------------------------------------------------------- configuration

@dataclass(frozen=True)
class ScatteringConfig:
    gamma_p_mhz: float = 3.0
    delta_p_mhz: float = 1000.0
    omega_laser_mhz: float = 50.0


@dataclass(frozen=True)
class PhysicsConfig:
    omega_mhz: float = 2.5
    delta_over_omega: float = 20.0
    gamma_over_omega: float = 1e-3
    angular: bool = False
    scattering: Optional[ScatteringConfig] = None


@dataclass(frozen=True)
class RunOptions:
    mode: str = "lindblad"
    seed: int = 0
    points: int = DEFAULT_POINTS
    parallel: Optional[int] = None
    input: str = "+"
    axial_average: bool = True
    t_max: Optional[float] = None
    delta_grid: Optional[tuple] = None
    gamma_grid: Optional[tuple] = None
    delta_perturbation: float = 0.1


@dataclass(frozen=True)
class RunConfig:
    command: str
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    run: RunOptions = field(default_factory=RunOptions)
    output_dir: str = "results"

    def _to_rad(self, mhz: float) -> float:
        scale = 1e6 if self.physics.angular else 2 * math.pi * 1e6
        return mhz * scale

    @property
    def omega(self) -> float:
        return self._to_rad(self.physics.omega_mhz)

    def system_spec(self) -> SystemSpec:
        p = self.physics
        return SystemSpec.from_ratios(self.omega, p.delta_over_omega, p.gamma_over_omega)

    def intermediate_spec(self) -> Optional[IntermediateStateSpec]:
        s = self.physics.scattering
        if s is None:
            return None
        return IntermediateStateSpec(self._to_rad(s.gamma_p_mhz), self._to_rad(s.delta_p_mhz),
                                     self._to_rad(s.omega_laser_mhz))


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{path}: must be finite, got {value!r}")
    return float(value)


def _integer(value: Any, path: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {value}")
    return value


def _boolean(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{path}: expected true or false, got {value!r}")
    return value


def _section(data: Any, path: str, allowed) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object, got {type(data).__name__}")
    for key in data:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key")
    return data


def _grid(value: Any, path: str) -> Optional[tuple]:
    if value is None:
        return None
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{path}: expected a nonempty list of numbers")
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(value))


def _parse_physics(data: dict) -> PhysicsConfig:
    d = _section(data, "physics", {f.name for f in fields(PhysicsConfig)})
    kw = {}
    for key in ("omega_mhz", "delta_over_omega", "gamma_over_omega"):
        if key in d:
            kw[key] = _number(d[key], f"physics.{key}")
    if "angular" in d:
        kw["angular"] = _boolean(d["angular"], "physics.angular")
    if kw.get("omega_mhz", 1.0) <= 0:
        raise ConfigError(f"physics.omega_mhz: must be positive, got {kw['omega_mhz']}")
    if kw.get("gamma_over_omega", 0.0) < 0:
        raise ConfigError(f"physics.gamma_over_omega: must be non-negative, got {kw['gamma_over_omega']}")
    if d.get("scattering") is not None:
        s = _section(d["scattering"], "physics.scattering", {f.name for f in fields(ScatteringConfig)})
        skw = {k: _number(v, f"physics.scattering.{k}") for k, v in s.items()}
        for k, v in skw.items():
            if (k == "delta_p_mhz" and v == 0) or v < 0:
                raise ConfigError(f"physics.scattering.{k}: invalid value {v}")
        kw["scattering"] = ScatteringConfig(**skw)
    return PhysicsConfig(**kw)


def _parse_run(data: dict) -> RunOptions:
    d = _section(data, "run", {f.name for f in fields(RunOptions)})
    kw = {}
    if "mode" in d:
        mode = {"full_unitary": "unitary"}.get(d["mode"], d["mode"])
        if mode not in MODES:
            raise ConfigError(f"run.mode: expected one of {MODES}, got {d['mode']!r}")
        kw["mode"] = mode
    if "seed" in d:
        kw["seed"] = _integer(d["seed"], "run.seed", 0)
    if "points" in d:
        kw["points"] = _integer(d["points"], "run.points", 2)
    if d.get("parallel") is not None:
        kw["parallel"] = _integer(d["parallel"], "run.parallel", 1)
    if "input" in d:
        if d["input"] not in InputQubitSpec.AXIAL:
            raise ConfigError(f"run.input: expected one of {InputQubitSpec.AXIAL}, got {d['input']!r}")
        kw["input"] = d["input"]
    if "axial_average" in d:
        kw["axial_average"] = _boolean(d["axial_average"], "run.axial_average")
    if d.get("t_max") is not None:
        kw["t_max"] = _number(d["t_max"], "run.t_max")
        if kw["t_max"] <= 0:
            raise ConfigError(f"run.t_max: must be positive, got {kw['t_max']}")
    for key in ("delta_grid", "gamma_grid"):
        kw[key] = _grid(d.get(key), f"run.{key}")
    if kw["gamma_grid"] and min(kw["gamma_grid"]) < 0:
        raise ConfigError("run.gamma_grid: rates must be non-negative")
    if "delta_perturbation" in d:
        kw["delta_perturbation"] = _number(d["delta_perturbation"], "run.delta_perturbation")
        if not 0 <= kw["delta_perturbation"] <= 0.5:
            raise ConfigError("run.delta_perturbation: must lie in [0, 0.5]")
    return RunOptions(**kw)


def parse_config(data: Optional[dict] = None, command: Optional[str] = None) -> RunConfig:
    """Validate a configuration mapping; ``command`` overrides ``data["command"]``."""
    d = _section(data or {}, "config", {"command", "physics", "run", "output"})
    command = command or d.get("command")
    if command is None:
        raise ConfigError("command: missing required field")
    if command not in COMMANDS:
        raise ConfigError(f"command: expected one of {COMMANDS}, got {command!r}")
    out = _section(d.get("output", {}), "output", {"dir"})
    out_dir = out.get("dir", "results")
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError(f"output.dir: expected a path string, got {out_dir!r}")
    return RunConfig(command, _parse_physics(d.get("physics", {})), _parse_run(d.get("run", {})), out_dir)


def serialize(cfg: RunConfig) -> dict:
    """JSON-ready mapping that :func:`parse_config` turns back into ``cfg``."""
    run = asdict(cfg.run)
    for key in ("delta_grid", "gamma_grid"):
        if run[key] is not None:
            run[key] = list(run[key])
    return {"command": cfg.command, "physics": asdict(cfg.physics), "run": run,
            "output": {"dir": cfg.output_dir}}


def _read_json(path: str | Path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config: file {str(p)!r} not found")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError("config: expected a JSON object")
    return data


def load_config(path: str | Path, command: Optional[str] = None) -> RunConfig:
    return parse_config(_read_json(path), command)


# ---------------------------------------------------------------- command implementations

@dataclass
class Outcome:
    rows: list
    summary: dict
    step: Optional[float] = None


def _records_rows(records) -> list:
    return [r.row() for r in records]


def _time_grid(t_max: float, points: int) -> np.ndarray:
    return np.linspace(0.0, t_max, points)


def _cmd_epr(cfg: RunConfig) -> Outcome:
    spec, ispec, mode = cfg.system_spec(), cfg.intermediate_spec(), cfg.run.mode
    if mode == "ideal":
        raise ConfigError("run.mode: 'ideal' has no time dependence for command epr")
    omega = spec.omega_0r
    t_max = cfg.run.t_max or 3 * PulseTimings.from_omega(1.0).t1
    traj = epr_trajectory(spec, _time_grid(t_max, cfg.run.points) / omega, mode, ispec)
    rows = []
    for t, s in zip(traj.times, traj.states):
        rho = s.to_density() if hasattr(s, "to_density") else s
        rows.append({"omega_t": t * omega, "p00": rho.matrix[0, 0].real, "p_epr": epr_population(rho),
                     "p_rr": rho.matrix[8, 8].real})
    t_peak, p_peak = epr_first_peak(spec, mode, ispec)
    channels = [] if mode == "unitary" else decay_channels(spec, [0, 1], ("to_g0",))
    return Outcome(rows, {"first_peak_omega_t": t_peak * omega, "first_peak_p_epr": p_peak,
                          "t1_nominal_ns": PulseTimings.from_omega(omega).t1 * 1e9},
                   default_step(h_epr(spec), channels, t_peak))


def _cmd_gate(cfg: RunConfig) -> Outcome:
    spec, mode = cfg.system_spec(), cfg.run.mode
    if mode == "ideal":
        raise ConfigError("run.mode: 'ideal' has no time dependence for command gate")
    gamma = cfg.physics.gamma_over_omega if mode == "lindblad" else 0.0
    t_gate = gate_duration(SystemSpec.from_ratios(1.0, 1.0))
    records = fig6_populations(cfg.physics.delta_over_omega, gamma, cfg.run.t_max or t_gate, cfg.run.points)
    run_spec = spec if mode == "lindblad" else spec.without_decay()
    f = gate_fidelity(run_spec, cfg.intermediate_spec() if mode == "lindblad" else None)
    return Outcome(_records_rows(records),
                   {"gate_fidelity": f, "gate_time_ns": gate_duration(spec) * 1e9},
                   default_step(h_gate(spec), decay_channels(run_spec, [0, 1]), gate_duration(spec)))


def _cmd_teleport(cfg: RunConfig) -> Outcome:
    spec, ispec = cfg.system_spec(), cfg.intermediate_spec()
    qubit = InputQubitSpec.from_label(cfg.run.input)
    rep = teleport(qubit, spec, cfg.run.mode, ispec, average_axial=cfg.run.axial_average)
    rows = [{"q1": b.outcome_q1, "q2": b.outcome_q2, "probability": b.probability,
             "branch_fidelity": b.branch_fidelity} for b in rep.branches]
    rows.append({"q1": "all", "q2": "all", "probability": sum(b.probability for b in rep.branches),
                 "branch_fidelity": rep.fidelity})
    sampled = sample_branch(rep.branches, np.random.default_rng(cfg.run.seed))
    summary = {"input": cfg.run.input, "fidelity": rep.fidelity,
               "average_fidelity": rep.average_fidelity, "axial_fidelities": rep.axial_fidelities,
               "total_time_ns": rep.total_time * 1e9, "simulated_time_ns": rep.simulated_time * 1e9,
               "stage_times_ns": {k: v * 1e9 for k, v in rep.stage_times.items()},
               "sampled_outcome": {"q1": sampled.outcome_q1, "q2": sampled.outcome_q2,
                                   "recovery": sampled.recovery}}
    return Outcome(rows, summary, default_step(h_epr(spec), decay_channels(spec, [0, 1]), rep.total_time))


def _cmd_fig3(cfg: RunConfig) -> Outcome:
    records = fig3_populations(cfg.physics.delta_over_omega, cfg.run.t_max or 12.0, cfg.run.points)
    peaks = epr_peaks(records)
    return Outcome(_records_rows(records),
                   {"peaks": [{"omega_t": t, "p_epr": p} for t, p in peaks],
                    "max_p_epr": max(r.values["p_epr"] for r in records)})


def _cmd_fig4(cfg: RunConfig) -> Outcome:
    records = fig4_surface(cfg.run.delta_grid or FIG4_DELTA, cfg.run.gamma_grid or FIG4_GAMMA,
                           cfg.run.parallel)
    best = max(records, key=lambda r: r.values["p_epr_peak"])
    return Outcome(_records_rows(records), {"n_points": len(records), "best": best.row()})


def _cmd_fig5(cfg: RunConfig) -> Outcome:
    p = cfg.physics
    records = fig5_disentangle(p.delta_over_omega, p.gamma_over_omega, cfg.run.t_max or 2 * np.pi,
                               cfg.run.points)
    return Outcome(_records_rows(records),
                   {"max_p_transfer": max(r.values["p_transfer"] for r in records),
                    "min_p_blockade": min(r.values["p_blockade"] for r in records)})


def _cmd_fig6(cfg: RunConfig) -> Outcome:
    records = fig6_gate_fidelity(cfg.run.delta_grid or FIG6_DELTA, cfg.run.gamma_grid or FIG6_GAMMA,
                                 cfg.run.parallel)
    return Outcome(_records_rows(records), {"n_points": len(records),
                                            "max_gate_fidelity": max(r.values["gate_fidelity"] for r in records)})


def _cmd_robustness(cfg: RunConfig) -> Outcome:
    qubit = None if cfg.run.axial_average else InputQubitSpec.from_label(cfg.run.input)
    records = robustness_sweep(cfg.system_spec(), cfg.run.delta_perturbation, qubit, cfg.intermediate_spec())
    return Outcome(_records_rows(records), {"spread": spread(records)})


_DISPATCH = {"epr": _cmd_epr, "gate": _cmd_gate, "teleport": _cmd_teleport, "fig3": _cmd_fig3,
             "fig4": _cmd_fig4, "fig5": _cmd_fig5, "fig6": _cmd_fig6, "robustness": _cmd_robustness}


# ---------------------------------------------------------------- output

def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    return f"{float(value):.{SIG_DIGITS}g}"


def write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def output_paths(cfg: RunConfig) -> tuple[Path, Path]:
    out = Path(cfg.output_dir)
    return out / f"{cfg.command}.manifest.json", out / f"{cfg.command}.csv"


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    manifest_path, csv_path = output_paths(cfg)
    written = []
    start = time.perf_counter()
    try:
        outcome = _DISPATCH[cfg.command](cfg)
        manifest = {
            "config": serialize(cfg),
            "version": __version__,
            "conventions": CONVENTIONS,
            "results_summary": outcome.summary,
            "wall_clock_s": time.perf_counter() - start,
            "integrator_step": outcome.step,
            "workers": resolve_workers(cfg.run.parallel),
            "columns": list(COLUMNS[cfg.command]),
        }
        manifest_path.parent.mkdir(parents=True, exist_ok=True)
        written.append(manifest_path)
        manifest_path.write_text(json.dumps(_jsonable(manifest), indent=2, allow_nan=True) + "\n")
        written.append(csv_path)
        write_csv(csv_path, COLUMNS[cfg.command], outcome.rows)
    except (SolverError, ConfigError, ValueError, RuntimeError, OSError) as exc:
        for p in written:
            p.unlink(missing_ok=True)
        print(f"rydsim {cfg.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------- argument parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rydsim",
                                     description="Rydberg-blockade teleportation simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON file with physics/run/output sections")
    parser.add_argument("--seed", type=int, help="seed for the sampled measurement outcome")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--mode", choices=MODES + ("full_unitary",))
    parser.add_argument("--points", type=int, help="samples on time axes")
    parser.add_argument("--parallel", type=int, help="worker processes for sweeps")
    parser.add_argument("--omega-mhz", type=float)
    parser.add_argument("--delta-over-omega", type=float)
    parser.add_argument("--gamma-over-omega", type=float)
    parser.add_argument("--input", choices=InputQubitSpec.AXIAL, help="input qubit for teleport")
    parser.add_argument("--no-axial-average", action="store_true",
                        help="skip the six-state average in teleport/robustness")
    parser.add_argument("--scattering", action="store_true",
                        help="add intermediate-state scattering with default parameters")
    parser.add_argument("--t-max", type=float, help="end of the time axis in units of 1/omega")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    data = _read_json(args.config) if args.config else {}
    data = {k: (dict(v) if isinstance(v, dict) else v) for k, v in data.items()}
    physics, run_opts = data.setdefault("physics", {}), data.setdefault("run", {})
    for flag, key in (("omega_mhz", "omega_mhz"), ("delta_over_omega", "delta_over_omega"),
                      ("gamma_over_omega", "gamma_over_omega")):
        if getattr(args, flag) is not None:
            physics[key] = getattr(args, flag)
    if args.scattering and physics.get("scattering") is None:
        physics["scattering"] = asdict(ScatteringConfig())
    for flag in ("seed", "mode", "points", "parallel", "input", "t_max"):
        if getattr(args, flag) is not None:
            run_opts[flag] = getattr(args, flag)
    if args.no_axial_average:
        run_opts["axial_average"] = False
    if args.out:
        data["output"] = {**data.get("output", {}), "dir": args.out}
    return parse_config(data, args.command)


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"rydsim: configuration error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
