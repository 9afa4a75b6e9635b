"""Stochastic unravelling vs the dense oracle, jump statistics, averaging."""

import numpy as np
import pytest

from revanneal._engine import DiagStep, build_segments, run_ensemble
from revanneal.closed import evolve_unitary, success_probability
from revanneal.dissipation import BathSpec, build_bundle
from revanneal.hamiltonian import ProblemSpec, SpectralGrid
from revanneal.operators import symmetric_isometry
from revanneal.schedule import AnnealPath, PathKind, load_schedule
from revanneal.trajectories import (
    OpenSystemContext,
    average,
    hold_fixed_s,
    initial_state,
    lindblad_oracle,
    run_open_point,
    run_trajectory,
    slowest_transfer_rate,
    sweep_open,
    w_of_m0,
)

LINEAR = load_schedule("linear")


def spec_for(n=4, p=3, space="dicke"):
    return ProblemSpec(n=n, p=p, curves=LINEAR, space=space)


def test_w_of_m0():
    assert w_of_m0(20, 0.9) == 1
    assert w_of_m0(20, -1.0) == 20
    assert w_of_m0(4, 0.0) == 2
    with pytest.raises(ValueError):
        w_of_m0(4, 0.3)


def test_average_statistics():
    res = average([1.0] * 10)
    assert res.p0_mean == 1.0 and res.p0_stderr == 0.0
    k = 1000
    res = average([1.0] * (k // 2) + [0.0] * (k // 2))
    assert res.p0_mean == pytest.approx(0.5)
    assert res.p0_stderr == pytest.approx(0.5 / np.sqrt(k - 1), rel=1e-2)
    with pytest.raises(ValueError):
        average([1.0])


def test_jump_histogram():
    res = average([0.5, 0.5, 0.5, 0.5], jump_counts=[0, 1, 1, 3])
    assert res.jump_histogram == {0: 1, 1: 2, 3: 1}
    assert res.observables["jumps"][0] == pytest.approx(1.25)


def test_trajectory_determinism():
    spec = spec_for()
    bath = BathSpec()
    ctx = OpenSystemContext(spec, bath, ds=1e-2)
    path = AnnealPath(tau=20.0, kind=PathKind.REVERSE, s_inv=0.3)
    psi0 = initial_state(spec, 1)
    a1, log1 = run_trajectory(spec, path, bath, psi0, seed=42, context=ctx)
    a2, log2 = run_trajectory(spec, path, bath, psi0, seed=42, context=ctx)
    np.testing.assert_array_equal(a1, a2)
    assert log1 == log2


def test_batching_independence():
    """Trajectory j is identical whether run alone or inside a batch."""
    spec = spec_for()
    ctx = OpenSystemContext(spec, BathSpec(), ds=1e-2)
    path = AnnealPath(tau=20.0, kind=PathKind.REVERSE, s_inv=0.3)
    psi0 = initial_state(spec, 1)
    batch = run_ensemble(ctx.grid, ctx.bundles, path, psi0, 8, seed=5)
    for j in (0, 3, 7):
        single = run_ensemble(ctx.grid, ctx.bundles, path, psi0, j + 1, seed=5)
        np.testing.assert_allclose(batch.psi_work[:, j], single.psi_work[:, j],
                                   atol=1e-12)


def test_zero_coupling_reduces_to_closed():
    spec = spec_for(n=5)
    bath = BathSpec(eta=1e-30, lamb_shift=False)
    ctx = OpenSystemContext(spec, bath)
    path = AnnealPath(tau=15.0, kind=PathKind.REVERSE, s_inv=0.35)
    psi0 = initial_state(spec, 1)
    ens = run_open_point(ctx, path, psi0, 2, seed=0)
    closed = evolve_unitary(spec, path, psi0, tol=1e-11)
    p0_closed = success_probability(closed.psi, spec)
    assert ens.p0_mean == pytest.approx(p0_closed, abs=1e-4)
    assert ens.observables["jumps"][0] == 0.0


def test_eigenstate_dark_at_s1():
    """Holding at s=1, any computational eigenstate is unchanged: pure
    dephasing cannot move population."""
    spec = spec_for(n=4)
    rho0 = np.zeros((5, 5), dtype=complex)
    rho0[1, 1] = 1.0
    rho = hold_fixed_s(spec, 1.0, BathSpec(), rho0, duration=50.0)
    np.testing.assert_allclose(rho, rho0, atol=1e-10)


def test_norm_monotone_between_jumps():
    """The in-cell decay factors never increase any component's magnitude."""
    spec = spec_for(n=5)
    ctx = OpenSystemContext(spec, BathSpec(), ds=1e-2)
    path = AnnealPath(tau=20.0, kind=PathKind.REVERSE, s_inv=0.3)
    segs = build_segments(ctx.grid, ctx.bundles, path)
    for seg in segs:
        if isinstance(seg, DiagStep):
            assert np.all(seg.lam.imag <= 1e-15)
            assert np.all(np.abs(seg.decay) <= 1.0 + 1e-12)


def test_jump_weights_sum_to_total_decay():
    """Total jump weight equals the norm-decay rate of H_eff (consistency of
    the channel probabilities with the threshold crossing)."""
    spec = spec_for(n=5)
    bath = BathSpec()
    bundle = build_bundle(spec, 0.4, bath)
    d = bundle.diag_elements - bundle.diag_elements[:, :1]
    rng = np.random.default_rng(3)
    psi = rng.normal(size=6) + 1j * rng.normal(size=6)
    psi /= np.linalg.norm(psi)
    pops = np.abs(psi) ** 2
    total_jump = (bundle.transfer @ pops).sum() + bundle.gamma0 * ((d**2) @ pops).sum()
    rates = bundle.decay_out + bundle.gamma0 * (d**2).sum(axis=0)
    assert total_jump == pytest.approx((rates * pops).sum(), rel=1e-12)


def test_sector_confinement_collective_full_space():
    """Collective-model trajectories started symmetric stay symmetric."""
    spec = spec_for(n=4, space="full")
    bath = BathSpec(model="collective")
    ctx = OpenSystemContext(spec, bath, ds=1e-2, keep=16)
    path = AnnealPath(tau=30.0, kind=PathKind.REVERSE, s_inv=0.3)
    psi0 = initial_state(spec, 1)
    p = symmetric_isometry(4)
    run = run_ensemble(ctx.grid, ctx.bundles, path, psi0, 20, seed=11)
    for j in range(20):
        psi = run.psi_work[:, j]
        assert np.linalg.norm(p.T @ psi) == pytest.approx(1.0, abs=1e-4)


def _oracle_compare(spec, bath, path, n_traj, seed, ds=1e-2):
    ctx = OpenSystemContext(spec, bath, ds=ds, keep=spec.dim)
    psi0 = initial_state(spec, 1)
    ens = run_open_point(ctx, path, psi0, n_traj, seed=seed)
    oracle = lindblad_oracle(spec, path, bath, np.outer(psi0, psi0.conj()),
                             context=ctx)
    p0_oracle = success_probability(oracle.rho, spec)
    assert oracle.trace_error < 1e-7
    assert not oracle.positivity_violated
    z = abs(ens.p0_mean - p0_oracle) / max(ens.p0_stderr, 1e-12)
    return z


def test_mcwf_matches_oracle_collective():
    spec = spec_for(n=4)
    path = AnnealPath(tau=20.0, kind=PathKind.REVERSE, s_inv=0.3)
    assert _oracle_compare(spec, BathSpec(), path, 800, seed=2) < 3.0


def test_mcwf_matches_oracle_independent():
    spec = spec_for(n=3, space="full")
    bath = BathSpec(model="independent")
    path = AnnealPath(tau=20.0, kind=PathKind.REVERSE, s_inv=0.3)
    assert _oracle_compare(spec, bath, path, 800, seed=3) < 3.0


def test_mcwf_matches_oracle_paused():
    spec = spec_for(n=3)
    path = AnnealPath(tau=15.0, kind=PathKind.REVERSE_PAUSED, s_inv=0.4,
                      t_pause=20.0)
    assert _oracle_compare(spec, BathSpec(), path, 800, seed=4) < 3.0


def test_oracle_unitary_limit():
    spec = spec_for(n=4)
    bath = BathSpec(eta=1e-30, lamb_shift=False)
    path = AnnealPath(tau=15.0, kind=PathKind.REVERSE, s_inv=0.35)
    psi0 = initial_state(spec, 1)
    oracle = lindblad_oracle(spec, path, bath, np.outer(psi0, psi0.conj()))
    closed = evolve_unitary(spec, path, psi0, tol=1e-11)
    rho_ref = np.outer(closed.psi, closed.psi.conj())
    assert np.max(np.abs(oracle.rho - rho_ref)) < 1e-3


def test_gibbs_relaxation_fixed_s():
    spec = spec_for(n=4)
    bath = BathSpec()
    bundle = build_bundle(spec, 0.5, bath)
    gamma_min = slowest_transfer_rate(spec, 0.5, bath)
    rho0 = np.zeros((5, 5), dtype=complex)
    rho0[2, 2] = 1.0
    rho = hold_fixed_s(spec, 0.5, bath, rho0, duration=50.0 / gamma_min)
    diff = rho - bundle.gibbs_state()
    trace_dist = 0.5 * np.abs(np.linalg.eigvalsh(diff)).sum()
    assert trace_dist < 1e-3


def test_oracle_dim_cap():
    spec = spec_for(n=8, space="full")
    path = AnnealPath(tau=5.0, kind=PathKind.REVERSE, s_inv=0.5)
    with pytest.raises(ValueError, match="oracle"):
        lindblad_oracle(spec, path, BathSpec(), np.eye(256) / 256)


def test_sweep_open_seeding_and_hook(tmp_path):
    spec = spec_for(n=3)
    bath = BathSpec()
    ctx = OpenSystemContext(spec, bath, ds=1e-2)
    cache = {}

    def hook(m0, s_inv, point=None):
        if point is None:
            return cache.get((m0, s_inv))
        cache[(m0, s_inv)] = point

    r1 = sweep_open(spec, 10.0, bath, [1.0], [0.3, 0.5], n_traj=20, seed=9,
                    context=ctx, point_hook=hook)
    r2 = sweep_open(spec, 10.0, bath, [1.0], [0.3, 0.5], n_traj=20, seed=9,
                    context=ctx, point_hook=hook)
    for a, b in zip(r1.points, r2.points):
        assert a.p0 == b.p0 and a.stderr == b.stderr
    with pytest.raises(ValueError, match="empty"):
        sweep_open(spec, 10.0, bath, [1.0], [], context=ctx)


def test_truncation_leakage_warning():
    spec = spec_for(n=6)
    ctx = OpenSystemContext(spec, BathSpec(), ds=1e-2, keep=2)
    path = AnnealPath(tau=10.0, kind=PathKind.REVERSE, s_inv=0.2)
    psi0 = initial_state(spec, 2)
    with pytest.warns(UserWarning, match="kept-subspace"):
        run_open_point(ctx, path, psi0, 4, seed=0)
