"""Monte Carlo wavefunction unravelling of the dephasing master equation,
trajectory averaging, and the dense density-matrix oracle used to verify it.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from ._engine import run_ensemble
from .dissipation import BathSpec, BundleGrid, build_bundle
from .hamiltonian import ProblemSpec, SpectralGrid
from .operators import symmetric_state
from .results import SweepPoint, SweepResult
from .schedule import AnnealPath, PathKind

ORACLE_DIM_CAP = 64
LEAKAGE_WARN_THRESHOLD = 0.99

DEFAULT_GRID_DS = 1e-3
# level truncation for the per-qubit model, keyed by qubit count:
# lowest three s=1 levels of the symmetric sector span this many eigenstates
DEFAULT_TRUNCATION = {7: 29, 8: 37}


def default_keep(spec: ProblemSpec) -> int | None:
    if spec.space == "full":
        return DEFAULT_TRUNCATION.get(spec.n)
    return None


class OpenSystemContext:
    """Shared precomputation (spectral grid + per-node dissipative data) that
    every sweep point and trajectory of one (problem, bath) pair reuses."""

    def __init__(self, spec: ProblemSpec, bath: BathSpec,
                 ds: float = DEFAULT_GRID_DS, keep: int | None = None,
                 dephasing_shift: bool = True):
        if keep is None:
            keep = default_keep(spec)
        self.spec = spec
        self.bath = bath
        self.grid = SpectralGrid(spec, ds=ds, keep=keep)
        self.bundles = BundleGrid(self.grid, bath, dephasing_shift=dephasing_shift)


def initial_state(spec: ProblemSpec, w: int) -> np.ndarray:
    """Working-basis trial state with w flipped spins (m0 = 1 - 2w/n)."""
    if not 0 <= w <= spec.n:
        raise ValueError(f"w={w} outside 0..{spec.n}")
    if spec.space == "dicke":
        psi = np.zeros(spec.dim)
        psi[w] = 1.0
        return psi
    return symmetric_state(spec.n, w)


def w_of_m0(n: int, m0: float) -> int:
    w = n * (1.0 - m0) / 2.0
    if abs(w - round(w)) > 1e-9:
        raise ValueError(f"m0={m0} is not of the form 1 - 2w/{n} for integer w")
    return int(round(w))


@dataclass
class EnsembleResult:
    """Trajectory-averaged observables with Monte Carlo standard errors."""

    n_traj: int
    p0_mean: float
    p0_stderr: float
    observables: dict = field(default_factory=dict)
    jump_histogram: dict = field(default_factory=dict)


def average(p0_values, jump_counts=None) -> EnsembleResult:
    """Unbiased mean and standard error over trajectory observables."""
    p0 = np.asarray(p0_values, dtype=float)
    k = p0.size
    if k < 2:
        raise ValueError("need at least 2 trajectories to estimate errors")
    mean = float(p0.mean())
    stderr = float(p0.std(ddof=1) / np.sqrt(k))
    obs = {"P0": (mean, stderr)}
    hist: dict = {}
    if jump_counts is not None:
        jumps = np.asarray(jump_counts)
        obs["jumps"] = (float(jumps.mean()),
                        float(jumps.std(ddof=1) / np.sqrt(k)))
        values, counts = np.unique(jumps, return_counts=True)
        hist = {int(v): int(c) for v, c in zip(values, counts)}
    return EnsembleResult(n_traj=k, p0_mean=mean, p0_stderr=stderr,
                          observables=obs, jump_histogram=hist)


def run_trajectory(spec: ProblemSpec, path: AnnealPath, bath: BathSpec,
                   psi0: np.ndarray, seed: int,
                   context: OpenSystemContext | None = None):
    """Single stochastic trajectory; returns (final normalized state in the
    working basis, jump log of (t_ns, kind, channel) events)."""
    if context is None:
        context = OpenSystemContext(spec, bath)
    run = run_ensemble(context.grid, context.bundles, path, psi0, 1,
                       seed=seed, record_jumps=True)
    _check_leakage(run)
    return run.psi_work[:, 0], run.jump_logs[0]


def _check_leakage(run):
    worst = float(run.kept_fraction.min())
    if worst < LEAKAGE_WARN_THRESHOLD:
        warnings.warn(
            f"kept-subspace population dropped to {worst:.4f}; "
            "the level truncation is too aggressive for this run",
            stacklevel=3,
        )


def run_open_point(context: OpenSystemContext, path: AnnealPath,
                   psi0: np.ndarray, n_traj: int, seed: int) -> EnsembleResult:
    run = run_ensemble(context.grid, context.bundles, path, psi0, n_traj,
                       seed=seed)
    _check_leakage(run)
    return average(run.p0, run.jumps)


def sweep_open(spec: ProblemSpec, tau: float, bath: BathSpec, m0_list,
               s_inv_grid, t_pause: float = 0.0, n_traj: int = 5000,
               seed: int = 0, context: OpenSystemContext | None = None,
               point_hook=None) -> SweepResult:
    """Success probability over an s_inv grid per initial magnetization.

    Each (m0, s_inv) point runs an independent trajectory ensemble; seeds are
    derived deterministically from the point's position in the sweep.
    point_hook(m0, s_inv) may return a cached SweepPoint (checkpointing) or
    receive the computed one via point_hook(m0, s_inv, point).
    """
    s_inv_grid = list(s_inv_grid)
    if not s_inv_grid:
        raise ValueError("empty s_inv grid")
    if context is None:
        context = OpenSystemContext(spec, bath)
    kind = PathKind.REVERSE_PAUSED if t_pause > 0 else PathKind.REVERSE
    result = SweepResult()
    for i, m0 in enumerate(m0_list):
        psi0 = initial_state(spec, w_of_m0(spec.n, m0))
        for j, s_inv in enumerate(s_inv_grid):
            if point_hook is not None:
                cached = point_hook(m0, s_inv)
                if cached is not None:
                    result.add(cached)
                    continue
            path = AnnealPath(tau=tau, kind=kind, s_inv=float(s_inv),
                              t_pause=t_pause)
            ens = run_open_point(context, path, psi0, n_traj,
                                 seed=seed + 100_000 * i + 1000 * j)
            point = SweepPoint(m0=m0, s_inv=float(s_inv), p0=ens.p0_mean,
                               stderr=ens.p0_stderr, n_traj=n_traj)
            if point_hook is not None:
                point_hook(m0, s_inv, point)
            result.add(point)
    return result


@dataclass
class OracleResult:
    rho: np.ndarray
    trace_error: float
    min_eigenvalue: float

    @property
    def positivity_violated(self) -> bool:
        return self.min_eigenvalue < -1e-7


def lindblad_oracle(spec: ProblemSpec, path: AnnealPath, bath: BathSpec,
                    rho0: np.ndarray, tol: float = 1e-8,
                    context: OpenSystemContext | None = None) -> OracleResult:
    """Direct dense integration of the master equation (verification scale).

    Uses the same per-node dissipative data as the trajectory unravelling, so
    ensemble-vs-oracle agreement checks exactly the unravelling itself.
    """
    if spec.dim > ORACLE_DIM_CAP:
        raise ValueError(
            f"oracle restricted to dim <= {ORACLE_DIM_CAP}, got {spec.dim}")
    if context is None:
        context = OpenSystemContext(spec, bath, keep=spec.dim)
    if context.grid.keep != spec.dim:
        raise ValueError("oracle requires an untruncated context")
    grid, bundles = context.grid, context.bundles
    dim = spec.dim
    gamma0 = bundles.gamma0

    deph_cache: dict = {}

    def node_arrays(c):
        cached = deph_cache.get(c)
        if cached is None:
            d = bundles.deph_diags[c]
            deph = -0.5 * gamma0 * ((d[:, :, None] - d[:, None, :]) ** 2).sum(axis=0)
            cached = (grid.vectors[c], bundles.lambda_eff[c].real,
                      bundles.transfer[c], deph)
            deph_cache[c] = cached
        return cached

    pause_arrays = None
    if path.t_pause > 0:
        bundle = bundles.node_bundle(path.s_inv)
        d = bundle.diag_elements
        deph = -0.5 * gamma0 * ((d[:, :, None] - d[:, None, :]) ** 2).sum(axis=0)
        pause_arrays = (bundle.vectors, bundle.energies + bundle.lamb_diag,
                        bundle.transfer, deph)
        pause_window = (path.t_inv, path.t_inv + path.t_pause)

    def rhs(t, y):
        if pause_arrays is not None and pause_window[0] <= t <= pause_window[1]:
            v, eps, w, deph = pause_arrays
        else:
            v, eps, w, deph = node_arrays(grid.cell_of(path.s_of_t(t)))
        rho = y.reshape(dim, dim)
        rt = v.conj().T @ rho @ v
        out = -1j * (eps[:, None] - eps[None, :]) * rt
        out[np.diag_indices(rt.shape[0])] += w @ np.real(np.diag(rt))
        wout = w.sum(axis=0)
        out -= 0.5 * (wout[:, None] + wout[None, :]) * rt
        out += deph * rt
        return (v @ out @ v.conj().T).ravel()

    total = path.total_time
    sol = solve_ivp(rhs, (0.0, total), np.asarray(rho0, dtype=complex).ravel(),
                    method="DOP853", rtol=tol, atol=tol * 1e-2,
                    max_step=max(total * grid.ds * 10.0, 1e-3))
    if not sol.success:
        raise RuntimeError(f"oracle integration failed: {sol.message}")
    rho = sol.y[:, -1].reshape(dim, dim)
    rho = 0.5 * (rho + rho.conj().T)
    trace_error = abs(np.trace(rho).real - 1.0)
    min_eig = float(np.linalg.eigvalsh(rho)[0])
    if min_eig < -1e-7:
        warnings.warn(
            f"oracle density matrix min eigenvalue {min_eig:.2e}; "
            "bundle grid may be too coarse", stacklevel=2)
    return OracleResult(rho=rho, trace_error=trace_error, min_eigenvalue=min_eig)


def hold_fixed_s(spec: ProblemSpec, s: float, bath: BathSpec,
                 rho0: np.ndarray, duration: float) -> np.ndarray:
    """Evolve under the fixed-s master equation for `duration` ns via the
    exponential of the (time-independent) dense generator."""
    if spec.dim > ORACLE_DIM_CAP:
        raise ValueError(f"fixed-s hold restricted to dim <= {ORACLE_DIM_CAP}")
    bundle = build_bundle(spec, s, bath)
    sup = bundle.generator_matrix()
    rho = expm(sup * duration) @ np.asarray(rho0, dtype=complex).ravel()
    return rho.reshape(spec.dim, spec.dim)


def slowest_transfer_rate(spec: ProblemSpec, s: float, bath: BathSpec) -> float:
    """Smallest nonzero eigenpair transfer rate at fixed s (sets the thermal
    relaxation timescale gamma_min)."""
    bundle = build_bundle(spec, s, bath)
    w = bundle.transfer[bundle.transfer > 1e-12]
    if w.size == 0:
        raise ValueError("no active transfer channels at this s")
    return float(w.min())
