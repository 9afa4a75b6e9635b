"""Run configuration: YAML schema, whole-config validation, and assembly of
the domain objects a run needs.

Schema (all keys lower-case; see README for a commented example)::

    mode: unitary | mcwf | oracle
    problem: {n, p, space}
    schedule: builtin name or CSV path
    path: {tau_ns, s_inv, t_pause_ns, fixed_midpoint_inversion}
    m0: list of initial magnetizations (1 - 2w/n)
    bath: {eta, omega_c_thz, temperature_ghz, model, lamb_shift}
    solver: {n_traj, seed, ds, truncation, tol}
    output: directory path

`s_inv` is either an explicit list or {start, stop, step}.  A `bath` section
is required for mcwf/oracle modes and rejected for unitary ones.  The whole
config is validated before any compute; every offending field is reported.
"""

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .dissipation import BathSpec
from .hamiltonian import ProblemSpec
from .schedule import ScheduleCurves, load_schedule
from .trajectories import w_of_m0

MODES = ("unitary", "mcwf", "oracle")

DEFAULT_SOLVER = {
    "n_traj": 5000,
    "seed": 0,
    "ds": 1e-3,
    "truncation": None,
    "tol": 1e-9,
}


class ConfigError(ValueError):
    """Validation failure; `errors` lists every offending field."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n" + "\n".join(
            f"  - {e}" for e in self.errors))


@dataclass
class RunConfig:
    mode: str
    spec: ProblemSpec
    curves: ScheduleCurves
    schedule_source: str
    tau: float
    s_inv_grid: list[float]
    t_pause: float
    fixed_midpoint_inversion: bool
    m0_list: list[float]
    bath: BathSpec | None
    n_traj: int
    seed: int
    ds: float
    truncation: int | None
    tol: float
    output_dir: Path
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def schedule_hash(self) -> str:
        """Digest of the interpolation table actually used."""
        h = hashlib.sha256()
        for arr in (self.curves.s_grid, self.curves.a_ghz, self.curves.b_ghz):
            h.update(np.asarray(arr, dtype=float).tobytes())
        return h.hexdigest()

    def manifest_payload(self) -> dict:
        return {
            "mode": self.mode,
            "problem": {"n": self.spec.n, "p": self.spec.p,
                        "space": self.spec.space},
            "schedule": {"source": self.schedule_source,
                         "name": self.curves.name,
                         "table_sha256": self.schedule_hash},
            "path": {"tau_ns": self.tau, "s_inv": self.s_inv_grid,
                     "t_pause_ns": self.t_pause,
                     "fixed_midpoint_inversion": self.fixed_midpoint_inversion},
            "m0": self.m0_list,
            "bath": None if self.bath is None else {
                "eta": self.bath.eta,
                "omega_c_thz": self.bath.omega_c_thz,
                "temperature_ghz": self.bath.temperature_ghz,
                "model": self.bath.model,
                "lamb_shift": self.bath.lamb_shift,
                "omega_bin": self.bath.omega_bin,
            },
            "solver": {"n_traj": self.n_traj, "seed": self.seed,
                       "ds": self.ds, "truncation": self.truncation,
                       "tol": self.tol},
            "output": str(self.output_dir),
        }


def _expand_s_inv(value, errors):
    if isinstance(value, dict):
        missing = {"start", "stop", "step"} - set(value)
        if missing:
            errors.append(f"path.s_inv range missing keys: {sorted(missing)}")
            return []
        start, stop, step = value["start"], value["stop"], value["step"]
        if step <= 0 or stop < start:
            errors.append("path.s_inv range needs step > 0 and stop >= start")
            return []
        count = int(round((stop - start) / step)) + 1
        return [round(start + i * step, 12) for i in range(count)]
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    errors.append("path.s_inv must be a list or a {start, stop, step} mapping")
    return []


def load_config(path) -> RunConfig:
    """Parse and validate a YAML config file.  Raises ConfigError listing
    every offending field; returns a fully assembled RunConfig otherwise."""
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError([f"cannot read config: {exc}"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError(["config root must be a mapping"])
    errors: list[str] = []

    mode = raw.get("mode")
    if mode not in MODES:
        errors.append(f"mode must be one of {MODES}, got {mode!r}")

    problem = raw.get("problem") or {}
    n = problem.get("n")
    p = problem.get("p")
    space = problem.get("space", "dicke")
    if not isinstance(n, int) or n < 2:
        errors.append("problem.n must be an integer >= 2")
    if not isinstance(p, int) or p < 2:
        errors.append("problem.p must be an integer >= 2")
    if space not in ("dicke", "full"):
        errors.append("problem.space must be 'dicke' or 'full'")

    schedule_source = raw.get("schedule", "linear")
    curves = None
    try:
        curves = load_schedule(schedule_source)
    except ValueError as exc:
        errors.append(f"schedule: {exc}")

    pathcfg = raw.get("path") or {}
    tau = pathcfg.get("tau_ns")
    if not isinstance(tau, (int, float)) or tau <= 0:
        errors.append("path.tau_ns must be a positive number")
    t_pause = pathcfg.get("t_pause_ns", 0.0)
    if not isinstance(t_pause, (int, float)) or t_pause < 0:
        errors.append("path.t_pause_ns must be >= 0")
    fixed_mid = bool(pathcfg.get("fixed_midpoint_inversion", False))
    s_inv_grid = _expand_s_inv(pathcfg.get("s_inv", []), errors)
    if not s_inv_grid:
        errors.append("path.s_inv grid is empty")
    for s in s_inv_grid:
        if not 0.0 < s < 1.0:
            errors.append(f"path.s_inv value {s} outside (0, 1)")
            break

    m0_list = raw.get("m0", [])
    if not isinstance(m0_list, (list, tuple)) or not m0_list:
        errors.append("m0 must be a non-empty list")
        m0_list = []
    if isinstance(n, int) and n >= 2:
        for m0 in m0_list:
            try:
                w_of_m0(n, float(m0))
            except (TypeError, ValueError):
                errors.append(f"m0={m0} is not 1 - 2w/{n} for integer w")

    bathcfg = raw.get("bath")
    bath = None
    if mode == "unitary":
        if bathcfg is not None:
            errors.append("bath section conflicts with mode=unitary")
    elif mode in ("mcwf", "oracle"):
        if bathcfg is None:
            errors.append(f"mode={mode} requires a bath section")
        else:
            try:
                bath = BathSpec(
                    eta=float(bathcfg.get("eta", 1e-3)),
                    omega_c_thz=float(bathcfg.get("omega_c_thz", 1.0)),
                    temperature_ghz=float(bathcfg.get("temperature_ghz", 1.57)),
                    model=bathcfg.get("model", "collective"),
                    lamb_shift=bool(bathcfg.get("lamb_shift", True)),
                )
            except (TypeError, ValueError) as exc:
                errors.append(f"bath: {exc}")
    if (bath is not None and bath.model == "independent" and space == "dicke"):
        errors.append("bath.model=independent requires problem.space=full")

    solver = {**DEFAULT_SOLVER, **(raw.get("solver") or {})}
    unknown = set(solver) - set(DEFAULT_SOLVER)
    if unknown:
        errors.append(f"unknown solver keys: {sorted(unknown)}")
    if not isinstance(solver["n_traj"], int) or solver["n_traj"] < 2:
        errors.append("solver.n_traj must be an integer >= 2")
    if not isinstance(solver["seed"], int):
        errors.append("solver.seed must be an integer")
    ds = solver["ds"]
    if not isinstance(ds, (int, float)) or not 0 < ds <= 0.1:
        errors.append("solver.ds must be in (0, 0.1]")
    trunc = solver["truncation"]
    if trunc is not None and (not isinstance(trunc, int) or trunc < 2):
        errors.append("solver.truncation must be null or an integer >= 2")

    output_dir = Path(raw.get("output", "out"))

    spec = None
    if not errors:
        try:
            spec = ProblemSpec(n=n, p=p, curves=curves, space=space)
        except ValueError as exc:
            errors.append(f"problem: {exc}")
    if not errors and spec is not None:
        # grid alignment: every s_inv must sit on the cell grid used by the
        # propagation engine (checkpointable sweeps require exact boundaries)
        for s in s_inv_grid:
            k = round(s / ds)
            if abs(k * ds - s) > 1e-9:
                errors.append(
                    f"path.s_inv={s} does not sit on the solver.ds={ds} grid")
    if errors:
        raise ConfigError(errors)

    return RunConfig(
        mode=mode, spec=spec, curves=curves, schedule_source=str(schedule_source),
        tau=float(tau), s_inv_grid=s_inv_grid, t_pause=float(t_pause),
        fixed_midpoint_inversion=fixed_mid,
        m0_list=[float(m) for m in m0_list], bath=bath,
        n_traj=solver["n_traj"], seed=solver["seed"], ds=float(ds),
        truncation=trunc, tol=float(solver["tol"]), output_dir=output_dir,
        raw=raw,
    )
