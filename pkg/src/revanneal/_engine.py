"""Piecewise-adiabatic propagation engine shared by the closed evolver and
the stochastic trajectory unravelling.

The state is carried as coefficients in the instantaneous eigenbasis of the
spectral-grid nodes.  Within a cell the generator is diagonal (exactly, since
both the decay and Lamb-shift parts are eigenbasis-diagonal), so propagation
is an elementwise phase/decay factor; crossing a cell boundary applies the
precomputed basis-overlap rotation.  Many trajectories propagate as columns
of one matrix; stochastic jumps individualize columns only at jump events.

Between jumps the squared norm decays monotonically, so threshold crossings
are bracketed by a cell step and refined by root finding on the analytic
in-cell norm (well below 1e-6 ns).
"""

from dataclasses import dataclass, field

import numpy as np

from .dissipation import BundleGrid
from .hamiltonian import SpectralGrid
from .schedule import AnnealPath, PathKind

JUMP_TIME_XTOL = 1e-9  # ns


@dataclass
class DiagStep:
    """Diagonal evolution for dt at one node."""

    dt: float
    t_start: float
    lam: np.ndarray  # complex (k,); Im <= 0
    decay: np.ndarray  # exp(-1j * lam * dt)
    transfer: np.ndarray | None = None  # W (k, k) or None for unitary runs
    deph: np.ndarray | None = None  # shifted dephasing diagonals (n_ops, k)
    gamma0: float = 0.0


@dataclass
class RotStep:
    matrix: np.ndarray


@dataclass
class PauseNode:
    """Eigenbasis data at the exact pause point, plus the rotation from the
    adjacent midpoint-node basis."""

    lam: np.ndarray
    transfer: np.ndarray | None
    deph: np.ndarray | None
    gamma0: float
    rot_in: np.ndarray  # midpoint basis -> pause basis


def _diag_step(dt, t_start, lam, transfer, deph, gamma0):
    return DiagStep(dt=dt, t_start=t_start, lam=lam,
                    decay=np.exp(-1j * lam * dt), transfer=transfer,
                    deph=deph, gamma0=gamma0)


def build_pause_node(grid: SpectralGrid, bundles: BundleGrid | None,
                     s_inv: float) -> PauseNode:
    cell = grid.cell_of(s_inv)
    if bundles is None:
        energies, rot = grid.node_at(s_inv)
        return PauseNode(lam=energies.astype(complex), transfer=None,
                         deph=None, gamma0=0.0, rot_in=rot)
    bundle = bundles.node_bundle(s_inv)
    d = bundle.diag_elements - bundle.diag_elements[:, :1]
    gamma_deph = bundle.gamma0 * (d**2).sum(axis=0)
    lam = bundle.energies + bundle.lamb_diag - 0.5j * (bundle.decay_out + gamma_deph)
    rot = bundle.vectors.conj().T @ grid.vectors[cell]
    return PauseNode(lam=lam, transfer=bundle.transfer, deph=d,
                     gamma0=bundle.gamma0, rot_in=rot)


def build_segments(grid: SpectralGrid, bundles: BundleGrid | None,
                   path: AnnealPath, pause_node: PauseNode | None = None):
    """Ordered prep/evolve/readout steps for one annealing path.

    The first step projects the working-basis initial state onto the starting
    node's eigenbasis; the last rotates back to the working basis at the end.
    """
    nc = grid.ncells
    ds = grid.ds

    def diag(c, dt, t0):
        if bundles is None:
            lam = grid.energies[c].astype(complex)
            return _diag_step(dt, t0, lam, None, None, 0.0)
        return _diag_step(dt, t0, bundles.lambda_eff[c], bundles.transfer[c],
                          bundles.deph_diags[c], bundles.gamma0)

    segs = []
    t = 0.0
    if path.kind is PathKind.FORWARD:
        segs.append(RotStep(grid.vectors[0].conj().T))
        dt = path.tau * ds
        for c in range(nc):
            segs.append(diag(c, dt, t))
            t += dt
            if c < nc - 1:
                segs.append(RotStep(grid.rotation_up[c]))
        segs.append(RotStep(grid.vectors[-1]))
        return segs

    k_turn = grid.boundary_index(path.s_inv)
    t_inv = path.t_inv
    dt_down = t_inv * ds / (1.0 - path.s_inv)
    dt_up = (path.tau - t_inv) * ds / (1.0 - path.s_inv)

    segs.append(RotStep(grid.vectors[-1].conj().T))
    for c in range(nc - 1, k_turn - 1, -1):
        segs.append(diag(c, dt_down, t))
        t += dt_down
        if c > k_turn:
            segs.append(RotStep(grid.rotation_up[c - 1].conj().T))
    if path.t_pause > 0.0:
        if pause_node is None:
            pause_node = build_pause_node(grid, bundles, path.s_inv)
        segs.append(RotStep(pause_node.rot_in))
        segs.append(_diag_step(path.t_pause, t, pause_node.lam,
                               pause_node.transfer, pause_node.deph,
                               pause_node.gamma0))
        t += path.t_pause
        segs.append(RotStep(pause_node.rot_in.conj().T))
    for c in range(k_turn, nc):
        segs.append(diag(c, dt_up, t))
        t += dt_up
        if c < nc - 1:
            segs.append(RotStep(grid.rotation_up[c]))
    segs.append(RotStep(grid.vectors[-1]))
    return segs


@dataclass
class EnsembleRun:
    """Raw per-trajectory output of one propagated ensemble."""

    psi_work: np.ndarray  # (dim, K) final working-basis amplitudes, normalized
    p0: np.ndarray  # (K,)
    jumps: np.ndarray  # (K,) jump counts
    kept_fraction: np.ndarray  # (K,) population retained through truncation
    jump_logs: list | None = None


def _apply_jump(psi, step: DiagStep, gen):
    pops = np.abs(psi) ** 2
    tw = step.transfer @ pops
    tw_total = tw.sum()
    if step.deph is not None and step.deph.size:
        dw = step.gamma0 * (step.deph**2) @ pops
        dw_total = dw.sum()
    else:
        dw = np.zeros(0)
        dw_total = 0.0
    u = gen.random() * (tw_total + dw_total)
    if u < tw_total or dw_total == 0.0:
        a = int(np.searchsorted(np.cumsum(tw), u))
        a = min(a, tw.size - 1)
        psi = np.zeros_like(psi)
        psi[a] = 1.0
        return psi, ("transfer", a)
    i = int(np.searchsorted(np.cumsum(dw), u - tw_total))
    i = min(i, dw.size - 1)
    psi = step.deph[i] * psi
    psi /= np.linalg.norm(psi)
    return psi, ("dephasing", i)


def _crossing_time(pops, rates, r, remaining):
    """First root of f(d) = sum(pops * exp(-rates*d)) - r on (0, remaining].

    f is positive at 0, negative at `remaining` (caller guarantees), strictly
    decreasing and convex, so Newton from the left converges monotonically;
    a bisection safeguard keeps the iterate inside the bracket regardless.
    """
    active = pops > 1e-300
    p = pops[active]
    w = rates[active]
    if p.size == 1:  # single exponential: closed form
        return float(np.log(p[0] / r) / w[0])
    lo, hi = 0.0, remaining
    delta = 0.0
    for _ in range(80):
        decayed = p * np.exp(-w * delta)
        f = decayed.sum() - r
        if f > 0.0:
            lo = delta
        else:
            hi = delta
        deriv = -(decayed * w).sum()
        step = -f / deriv if deriv != 0.0 else hi - lo
        new = delta + step
        if not lo < new < hi:
            new = 0.5 * (lo + hi)
        if abs(new - delta) < JUMP_TIME_XTOL:
            return new
        delta = new
    return 0.5 * (lo + hi)


def _resolve_column(psi, step: DiagStep, r, gen, log):
    """Evolve one column through a step in which at least one jump fires."""
    rates = -2.0 * step.lam.imag
    t_off = 0.0
    jumps = 0
    while True:
        remaining = step.dt - t_off
        pops = np.abs(psi) ** 2
        if (pops * np.exp(-rates * remaining)).sum() > r:
            psi = psi * np.exp(-1j * step.lam * remaining)
            return psi, r, jumps
        delta = _crossing_time(pops, rates, r, remaining)
        psi = psi * np.exp(-1j * step.lam * delta)
        t_off += delta
        psi, event = _apply_jump(psi, step, gen)
        jumps += 1
        if log is not None:
            log.append((step.t_start + t_off, *event))
        r = gen.random()


def run_ensemble(grid: SpectralGrid, bundles: BundleGrid | None,
                 path: AnnealPath, psi0: np.ndarray, n_traj: int,
                 seed: int = 0, record_jumps: bool = False,
                 ground_indices: np.ndarray | None = None) -> EnsembleRun:
    """Propagate n_traj stochastic trajectories (or one deterministic state
    when bundles is None) from the working-basis state psi0.

    Trajectory j draws from a counter-based Philox stream keyed by
    (seed, j), so results are reproducible and independent of batching.
    """
    segments = build_segments(grid, bundles, path)
    dissipative = bundles is not None
    if not dissipative:
        n_traj = 1

    psi = np.ascontiguousarray(psi0, dtype=complex)
    c = np.repeat(psi[:, None], n_traj, axis=1)
    gens = [np.random.Generator(np.random.Philox(key=[seed, j]))
            for j in range(n_traj)]
    r = np.array([g.random() for g in gens]) if dissipative else np.zeros(n_traj)
    jumps = np.zeros(n_traj, dtype=int)
    kept = np.ones(n_traj)
    logs = [[] for _ in range(n_traj)] if record_jumps else None
    truncated = grid.keep < grid.spec.dim

    for seg in segments:
        if isinstance(seg, RotStep):
            if truncated or seg.matrix.shape[0] != seg.matrix.shape[1]:
                before = np.einsum("ij,ij->j", c.conj(), c).real
                c = seg.matrix @ c
                after = np.einsum("ij,ij->j", c.conj(), c).real
                safe = np.maximum(after, 1e-300)
                c *= np.sqrt(before / safe)[None, :]
                kept *= after / np.maximum(before, 1e-300)
            else:
                c = seg.matrix @ c
            continue
        cnew = seg.decay[:, None] * c
        if dissipative:
            norms2 = np.einsum("ij,ij->j", cnew.conj(), cnew).real
            for col in np.flatnonzero(norms2 <= r):
                log = logs[col] if logs is not None else None
                psi_col, r_col, nj = _resolve_column(
                    c[:, col], seg, r[col], gens[col], log)
                cnew[:, col] = psi_col
                r[col] = r_col
                jumps[col] += nj
        c = cnew

    norms = np.sqrt(np.einsum("ij,ij->j", c.conj(), c).real)
    c = c / np.maximum(norms, 1e-300)[None, :]
    if ground_indices is None:
        ground_indices = grid.spec.ground_state_indices()
    p0 = (np.abs(c[ground_indices, :]) ** 2).sum(axis=0)
    return EnsembleRun(psi_work=c, p0=p0, jumps=jumps, kept_fraction=kept,
                       jump_logs=logs)
