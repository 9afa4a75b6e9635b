"""Batch front-end: validated configs in, CSV/plot-data artifacts out.

Commands: run, gap-scan, compare-models, validate.  Exit codes: 0 on
success, 1 on configuration/validation errors, 2 on runtime failures.
The REVANNEAL_WORKERS environment variable bounds the sweep worker pool
(default 1; sweep points are independent and parallelize trivially).
"""

import dataclasses
import json
import os
import sys
from multiprocessing import get_context
from pathlib import Path

import click

from . import __version__
from .closed import sweep_unitary
from .config import ConfigError, RunConfig, load_config
from .dissipation import BathSpec
from .hamiltonian import ProblemSpec, SpectralGrid, dump_spectrum, min_gap_scan
from .results import SweepPoint, SweepResult, write_manifest
from .schedule import AnnealPath, PathKind
from .trajectories import (
    ORACLE_DIM_CAP,
    OpenSystemContext,
    default_keep,
    initial_state,
    lindblad_oracle,
    run_open_point,
    sweep_open,
    w_of_m0,
)

WORKERS_ENV = "REVANNEAL_WORKERS"


def worker_count() -> int:
    try:
        return max(int(os.environ.get(WORKERS_ENV, "1")), 1)
    except ValueError:
        return 1


class Checkpoints:
    """One JSON file per (m0, s_inv) point; completed points are skipped on
    re-runs, making long sweeps resumable."""

    def __init__(self, directory: Path):
        self.directory = directory
        directory.mkdir(parents=True, exist_ok=True)

    def _path(self, m0, s_inv) -> Path:
        return self.directory / f"point_m0_{m0:+.6f}_s_{s_inv:.6f}.json"

    def load(self, m0, s_inv) -> SweepPoint | None:
        path = self._path(m0, s_inv)
        if not path.exists():
            return None
        return SweepPoint(**json.loads(path.read_text()))

    def store(self, m0, s_inv, point: SweepPoint):
        self._path(m0, s_inv).write_text(
            json.dumps(dataclasses.asdict(point), sort_keys=True))

    def hook(self, m0, s_inv, point: SweepPoint | None = None):
        if point is None:
            return self.load(m0, s_inv)
        self.store(m0, s_inv, point)
        return None


# --- worker-pool plumbing (fork start method: state inherited, not pickled) --

_POOL_STATE: dict = {}


def _open_point_worker(task):
    i, j, m0, s_inv = task
    cfg: RunConfig = _POOL_STATE["config"]
    ctx: OpenSystemContext = _POOL_STATE["context"]
    kind = PathKind.REVERSE_PAUSED if cfg.t_pause > 0 else PathKind.REVERSE
    path = AnnealPath(tau=cfg.tau, kind=kind, s_inv=s_inv, t_pause=cfg.t_pause,
                      fixed_midpoint_inversion=cfg.fixed_midpoint_inversion)
    psi0 = initial_state(cfg.spec, w_of_m0(cfg.spec.n, m0))
    ens = run_open_point(ctx, path, psi0, cfg.n_traj,
                         seed=cfg.seed + 100_000 * i + 1000 * j)
    return m0, s_inv, SweepPoint(m0=m0, s_inv=s_inv, p0=ens.p0_mean,
                                 stderr=ens.p0_stderr, n_traj=cfg.n_traj)


def _sweep_open_parallel(cfg: RunConfig, context, checkpoints: Checkpoints,
                         workers: int) -> SweepResult:
    tasks = []
    result = SweepResult()
    for i, m0 in enumerate(cfg.m0_list):
        for j, s_inv in enumerate(cfg.s_inv_grid):
            cached = checkpoints.load(m0, s_inv)
            if cached is not None:
                result.add(cached)
            else:
                tasks.append((i, j, m0, s_inv))
    if tasks:
        _POOL_STATE["config"] = cfg
        _POOL_STATE["context"] = context
        try:
            with get_context("fork").Pool(processes=workers) as pool:
                for m0, s_inv, point in pool.imap_unordered(
                        _open_point_worker, tasks):
                    checkpoints.store(m0, s_inv, point)
                    result.add(point)
        finally:
            _POOL_STATE.clear()
    return result


# --- run-mode implementations ------------------------------------------------


def _grid_keep(cfg: RunConfig):
    return cfg.truncation if cfg.truncation is not None else default_keep(cfg.spec)


def _run_unitary(cfg: RunConfig, checkpoints: Checkpoints) -> SweepResult:
    grid = SpectralGrid(cfg.spec, ds=cfg.ds, keep=_grid_keep(cfg))
    return sweep_unitary(cfg.spec, cfg.tau, cfg.m0_list, cfg.s_inv_grid,
                         grid=grid, point_hook=checkpoints.hook)


def _run_mcwf(cfg: RunConfig, checkpoints: Checkpoints) -> SweepResult:
    context = OpenSystemContext(cfg.spec, cfg.bath, ds=cfg.ds,
                                keep=_grid_keep(cfg))
    workers = worker_count()
    if workers > 1:
        return _sweep_open_parallel(cfg, context, checkpoints, workers)
    return sweep_open(cfg.spec, cfg.tau, cfg.bath, cfg.m0_list,
                      cfg.s_inv_grid, t_pause=cfg.t_pause, n_traj=cfg.n_traj,
                      seed=cfg.seed, context=context,
                      point_hook=checkpoints.hook)


def _run_oracle(cfg: RunConfig, checkpoints: Checkpoints) -> SweepResult:
    import numpy as np

    if cfg.spec.dim > ORACLE_DIM_CAP:
        raise ConfigError(
            [f"mode=oracle needs dim <= {ORACLE_DIM_CAP}, got {cfg.spec.dim}"])
    context = OpenSystemContext(cfg.spec, cfg.bath, ds=cfg.ds,
                                keep=cfg.spec.dim)
    kind = PathKind.REVERSE_PAUSED if cfg.t_pause > 0 else PathKind.REVERSE
    result = SweepResult()
    idx = cfg.spec.ground_state_indices()
    for m0 in cfg.m0_list:
        psi0 = initial_state(cfg.spec, w_of_m0(cfg.spec.n, m0))
        for s_inv in cfg.s_inv_grid:
            cached = checkpoints.load(m0, s_inv)
            if cached is not None:
                result.add(cached)
                continue
            path = AnnealPath(tau=cfg.tau, kind=kind, s_inv=s_inv,
                              t_pause=cfg.t_pause,
                              fixed_midpoint_inversion=cfg.fixed_midpoint_inversion)
            out = lindblad_oracle(cfg.spec, path, cfg.bath,
                                  np.outer(psi0, psi0.conj()), tol=cfg.tol,
                                  context=context)
            p0 = float(np.real(np.diagonal(out.rho)[idx]).sum())
            point = SweepPoint(m0=m0, s_inv=s_inv, p0=p0, stderr=0.0, n_traj=1)
            checkpoints.store(m0, s_inv, point)
            result.add(point)
    return result


def _write_artifacts(cfg: RunConfig, result: SweepResult):
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    result.to_csv(out / "sweep.csv")
    result.to_plot_dat(out / "sweep.dat")
    dump_spectrum(cfg.spec, out / "spectrum.csv", ds=1e-2)
    payload = cfg.manifest_payload()
    payload["workers"] = worker_count()
    payload["version"] = __version__
    write_manifest(out / "manifest.json", payload)


# --- click entry points ------------------------------------------------------


@click.group()
@click.version_option(__version__)
def main():
    """Reverse-annealing sweep runner for the ferromagnetic p-spin model."""


def _load_or_exit(config_path) -> RunConfig:
    try:
        return load_config(config_path)
    except ConfigError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
def run(config_path):
    """Execute the sweep described by CONFIG_PATH and write artifacts."""
    cfg = _load_or_exit(config_path)
    checkpoints = Checkpoints(cfg.output_dir / "checkpoints")
    runners = {"unitary": _run_unitary, "mcwf": _run_mcwf, "oracle": _run_oracle}
    try:
        result = runners[cfg.mode](cfg, checkpoints)
        _write_artifacts(cfg, result)
    except ConfigError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    except Exception as exc:  # noqa: BLE001 - runtime failures map to exit 2
        click.echo(f"runtime failure: {exc}", err=True)
        sys.exit(2)
    click.echo(f"wrote {cfg.output_dir}/sweep.csv "
               f"({len(result.points)} points)")


@main.command("gap-scan")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
def gap_scan(config_path):
    """Locate the minimal gap of the configured problem; write spectrum CSV."""
    cfg = _load_or_exit(config_path)
    try:
        scan = min_gap_scan(cfg.spec, ds=min(cfg.ds, 1e-3))
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        dump_spectrum(cfg.spec, cfg.output_dir / "spectrum.csv", ds=1e-3)
        write_manifest(cfg.output_dir / "gap.json", {
            "s_min": scan.s_min,
            "gap_rad_ns": scan.gap,
            "gap_GHz": scan.gap_ghz,
            "degenerate": scan.degenerate,
            "schedule": cfg.curves.name,
            "n": cfg.spec.n,
            "p": cfg.spec.p,
        })
    except Exception as exc:  # noqa: BLE001
        click.echo(f"runtime failure: {exc}", err=True)
        sys.exit(2)
    click.echo(f"s_min={scan.s_min:.6f} gap={scan.gap_ghz:.6f} GHz"
               + (" (degenerate)" if scan.degenerate else ""))


@main.command("compare-models")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
def compare_models(config_path):
    """Max-over-s_inv P0 per qubit count for both dephasing models."""
    cfg = _load_or_exit(config_path)
    compare = (cfg.raw.get("compare") or {})
    n_values = compare.get("n", list(range(3, min(cfg.spec.n, 8) + 1)))
    bad = [n for n in n_values if not 3 <= n <= 8]
    if bad:
        click.echo(f"compare.n values outside 3..8: {bad}", err=True)
        sys.exit(1)
    if cfg.bath is None:
        click.echo("compare-models requires a bath section", err=True)
        sys.exit(1)
    try:
        rows = []
        for n in n_values:
            for model in ("collective", "independent"):
                space = "dicke" if model == "collective" else "full"
                spec = ProblemSpec(n=n, p=cfg.spec.p, curves=cfg.curves,
                                   space=space)
                bath = BathSpec(
                    eta=cfg.bath.eta, omega_c_thz=cfg.bath.omega_c_thz,
                    temperature_ghz=cfg.bath.temperature_ghz, model=model,
                    lamb_shift=cfg.bath.lamb_shift)
                context = OpenSystemContext(spec, bath, ds=cfg.ds,
                                            keep=cfg.truncation or default_keep(spec))
                sweep = sweep_open(spec, cfg.tau, bath, [1.0 - 2.0 / n],
                                   cfg.s_inv_grid, t_pause=cfg.t_pause,
                                   n_traj=cfg.n_traj, seed=cfg.seed,
                                   context=context)
                best = sweep.max_p0(1.0 - 2.0 / n)
                rows.append((n, model, best.p0, best.stderr, best.s_inv))
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        out = cfg.output_dir / "compare_models.csv"
        with open(out, "w") as fh:
            fh.write("n,model,max_P0,stderr,s_inv_at_max\n")
            for n, model, p0, err, s_inv in rows:
                fh.write(f"{n},{model},{p0:.10f},{err:.10f},{s_inv:.6f}\n")
        payload = cfg.manifest_payload()
        payload["compare_n"] = list(n_values)
        payload["version"] = __version__
        write_manifest(cfg.output_dir / "manifest.json", payload)
    except Exception as exc:  # noqa: BLE001
        click.echo(f"runtime failure: {exc}", err=True)
        sys.exit(2)
    click.echo(f"wrote {out} ({len(rows)} rows)")


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
def validate(config_path):
    """Check a config file; list every offending field on failure."""
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    click.echo(f"OK: mode={cfg.mode}, n={cfg.spec.n}, p={cfg.spec.p}, "
               f"{len(cfg.m0_list)} m0 x {len(cfg.s_inv_grid)} s_inv points")


if __name__ == "__main__":
    main()
