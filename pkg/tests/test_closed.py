"""Closed-system evolution: unitarity, adiabaticity, engine cross-checks."""

import numpy as np
import pytest

from revanneal.closed import evolve_unitary, success_probability, sweep_unitary
from revanneal.hamiltonian import ProblemSpec, SpectralGrid, build_h, decompose
from revanneal.schedule import AnnealPath, PathKind, load_schedule
from revanneal.trajectories import initial_state

LINEAR = load_schedule("linear")


def spec_for(n=4, p=3, space="dicke"):
    return ProblemSpec(n=n, p=p, curves=LINEAR, space=space)


def test_initial_energy_is_exact_eigenvalue():
    spec = spec_for(n=5)
    for w in (0, 2):
        psi = initial_state(spec, w)
        h1 = build_h(spec, 1.0)
        energy = np.real(psi.conj() @ h1 @ psi)
        assert energy == pytest.approx(h1[w, w].real, abs=1e-10)


def test_norm_preserved():
    spec = spec_for(n=6)
    path = AnnealPath(tau=20.0, kind=PathKind.REVERSE, s_inv=0.4)
    res = evolve_unitary(spec, path, initial_state(spec, 1))
    assert res.norm_drift < 1e-6
    assert np.linalg.norm(res.psi) == pytest.approx(1.0, abs=1e-12)


def test_adiabatic_limit_stays_in_continued_state():
    """Slow reverse anneal with s_inv above the avoided crossing: the state
    follows its adiabatic continuation."""
    spec = spec_for(n=6)
    from revanneal.hamiltonian import min_gap_scan

    s_delta = min_gap_scan(spec, ds=2e-3).s_min
    s_inv = min(s_delta + 0.15, 0.95)
    path = AnnealPath(tau=1000.0, kind=PathKind.REVERSE, s_inv=s_inv)
    psi0 = initial_state(spec, 1)
    # adiabatic continuation of |w=1> from s=1: the instantaneous eigenstate
    # with the same index at s=1 (levels do not cross along the path segment)
    res = evolve_unitary(spec, path, psi0, tol=1e-10)
    dec1 = decompose(spec, 1.0)
    idx = int(np.argmax(np.abs(dec1.eigenvectors.T @ psi0)))
    p_stay = abs(dec1.eigenvectors[:, idx].conj() @ res.psi) ** 2
    assert p_stay > 0.99


def test_cells_vs_adaptive():
    spec = spec_for(n=4)
    path = AnnealPath(tau=15.0, kind=PathKind.REVERSE, s_inv=0.35)
    psi0 = initial_state(spec, 1)
    ref = evolve_unitary(spec, path, psi0, tol=1e-11)
    cells = evolve_unitary(spec, path, psi0, method="cells",
                           grid=SpectralGrid(spec, ds=1e-3))
    # global phases differ; compare density matrices
    rho_a = np.outer(ref.psi, ref.psi.conj())
    rho_c = np.outer(cells.psi, cells.psi.conj())
    assert np.max(np.abs(rho_a - rho_c)) < 1e-3


def test_cells_vs_adaptive_with_pause():
    spec = spec_for(n=3)
    path = AnnealPath(tau=12.0, kind=PathKind.REVERSE_PAUSED, s_inv=0.4,
                      t_pause=6.0)
    psi0 = initial_state(spec, 1)
    ref = evolve_unitary(spec, path, psi0, tol=1e-11)
    cells = evolve_unitary(spec, path, psi0, method="cells",
                           grid=SpectralGrid(spec, ds=1e-3))
    rho_a = np.outer(ref.psi, ref.psi.conj())
    rho_c = np.outer(cells.psi, cells.psi.conj())
    assert np.max(np.abs(rho_a - rho_c)) < 1e-3


def test_success_probability_forms():
    spec = spec_for(n=4, p=3)
    psi = np.zeros(5, dtype=complex)
    psi[0] = 1.0
    assert success_probability(psi, spec) == pytest.approx(1.0)
    rho = np.diag([0.25, 0.75, 0, 0, 0]).astype(complex)
    assert success_probability(rho, spec) == pytest.approx(0.25)
    spec_even = spec_for(n=4, p=2)
    rho = np.diag([0.25, 0, 0, 0, 0.5]).astype(complex)
    assert success_probability(rho, spec_even) == pytest.approx(0.75)


def test_embedding_equivalence():
    """Dicke-sector dynamics equals full-space dynamics from symmetric states."""
    from revanneal.operators import symmetric_isometry

    path = AnnealPath(tau=10.0, kind=PathKind.REVERSE, s_inv=0.3)
    for n in (3, 5):
        sd = spec_for(n=n)
        sf = spec_for(n=n, space="full")
        psi_d = evolve_unitary(sd, path, initial_state(sd, 1), tol=1e-11).psi
        psi_f = evolve_unitary(sf, path, initial_state(sf, 1), tol=1e-11).psi
        p = symmetric_isometry(n)
        proj = p.T @ psi_f
        assert np.linalg.norm(proj) == pytest.approx(1.0, abs=1e-8)
        rho_d = np.outer(psi_d, psi_d.conj())
        rho_p = np.outer(proj, proj.conj())
        assert np.max(np.abs(rho_d - rho_p)) < 1e-6


def test_sweep_unitary_shape():
    spec = spec_for(n=4)
    result = sweep_unitary(spec, tau=10.0, m0_list=[0.5], s_inv_grid=[0.3, 0.5],
                           grid=SpectralGrid(spec, ds=1e-2))
    assert len(result.points) == 2
    s, p0, _ = result.curve(0.5)
    assert s == [0.3, 0.5]
    assert all(0.0 <= x <= 1.0 + 1e-12 for x in p0)


def test_sweep_unitary_empty_grid():
    with pytest.raises(ValueError, match="empty"):
        sweep_unitary(spec_for(), tau=10.0, m0_list=[0.5], s_inv_grid=[])


def test_unnormalized_initial_state_rejected():
    spec = spec_for()
    path = AnnealPath(tau=5.0)
    with pytest.raises(ValueError, match="normalized"):
        evolve_unitary(spec, path, np.ones(5))
