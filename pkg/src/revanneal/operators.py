"""Collective-spin and full-space operators for the ferromagnetic p-spin model.

All dynamics of the collectively coupled model happens in the maximal-spin
subspace, whose dimension is n+1.  Basis states are labelled by the number of
flipped spins w, so that the total-z operator (sum of Pauli z's) has eigenvalue
n - 2w and the magnetization per spin is m = 1 - 2w/n.

For the per-qubit dephasing model we also build operators on the full 2^n
computational space.  Qubit 1 is the most significant bit of the basis index;
bit value 0 means spin up (sigma_z eigenvalue +1).
"""

from dataclasses import dataclass, field

import numpy as np

# Dense (n+1)x(n+1) matrices are cheap; the cap only guards against absurd n.
DEFAULT_DICKE_DIM_CAP = 4096
FULL_SPACE_MAX_QUBITS = 12


@dataclass(frozen=True)
class DickeSector:
    """Maximal-spin subspace: basis |w>, w = 0..n, with S_z|w> = (n-2w)|w>."""

    n: int
    dim: int
    w: np.ndarray = field(repr=False)  # basis labels 0..n

    @property
    def magnetization(self) -> np.ndarray:
        """m_z eigenvalues 1 - 2w/n per basis state."""
        return 1.0 - 2.0 * self.w / self.n


@dataclass(frozen=True)
class CollectiveOperators:
    """Total-spin operators (sums of Pauli matrices) in the |w> basis."""

    s_x: np.ndarray = field(repr=False)  # real symmetric, tridiagonal
    s_z: np.ndarray = field(repr=False)  # diagonal, entries n - 2w
    m_z_pow_p: dict = field(repr=False, default_factory=dict)  # cache keyed by p

    def m_z_power(self, p: int) -> np.ndarray:
        """Diagonal matrix of (S_z / n)^p."""
        if p not in self.m_z_pow_p:
            n = self.s_z.shape[0] - 1
            mz = np.diag(self.s_z) / n
            self.m_z_pow_p[p] = np.diag(mz**p)
        return self.m_z_pow_p[p]


@dataclass(frozen=True)
class FullSpaceOperators:
    """Computational-basis (2^n) operators for the per-qubit coupling model."""

    n: int
    sigma_z_diags: np.ndarray = field(repr=False)  # shape (n, 2^n), entries +-1
    sigma_x_total: np.ndarray = field(repr=False)  # dense 2^n x 2^n

    @property
    def sigma_z_total(self) -> np.ndarray:
        return self.sigma_z_diags.sum(axis=0)


def build_dicke_sector(n: int, dim_cap: int = DEFAULT_DICKE_DIM_CAP):
    """Build the (n+1)-dimensional maximal-spin sector and its operators.

    S_x is assembled from the ladder coefficients of the spin-n/2 irrep.  Since
    S_alpha here are sums of Pauli operators (twice the spin operators), the
    off-diagonal elements are 2 * (1/2) * sqrt(j(j+1) - mu(mu+1)) with j = n/2.
    """
    if n < 2:
        raise ValueError(f"need at least 2 qubits, got n={n}")
    dim = n + 1
    if dim > dim_cap:
        raise ValueError(
            f"n={n} gives a {dim}x{dim} dense sector above the cap {dim_cap}"
        )
    w = np.arange(dim)
    s_z = np.diag((n - 2 * w).astype(float))
    j = n / 2.0
    mu = j - w  # S_z/2 eigenvalue per basis state
    # <w-1| S_x |w> couples mu -> mu + 1
    off = np.sqrt(j * (j + 1) - mu[1:] * (mu[1:] + 1))
    s_x = np.diag(off, 1) + np.diag(off, -1)
    sector = DickeSector(n=n, dim=dim, w=w)
    return sector, CollectiveOperators(s_x=s_x, s_z=s_z)


def build_full_space(n: int) -> FullSpaceOperators:
    """Build per-qubit sigma_z diagonals and the summed sigma_x on 2^n states."""
    if not 2 <= n <= FULL_SPACE_MAX_QUBITS:
        raise ValueError(
            f"full space limited to 2 <= n <= {FULL_SPACE_MAX_QUBITS}, got {n}"
        )
    dim = 1 << n
    states = np.arange(dim)
    # qubit i (1-based) is bit n-i; bit 0 means spin up
    bits = (states[None, :] >> (n - 1 - np.arange(n)[:, None])) & 1
    sigma_z_diags = 1.0 - 2.0 * bits
    sigma_x_total = np.zeros((dim, dim))
    for i in range(n):
        flipped = states ^ (1 << (n - 1 - i))
        sigma_x_total[flipped, states] += 1.0
    return FullSpaceOperators(n=n, sigma_z_diags=sigma_z_diags, sigma_x_total=sigma_x_total)


def total_spin_squared(n: int) -> np.ndarray:
    """Dense S^2 = S_x^2 + S_y^2 + S_z^2 on the 2^n computational space.

    S_alpha are the Pauli sums, so the maximal-spin sector has eigenvalue
    n(n + 2).  Used to resolve degenerate eigenspaces into permutation-sector
    components: S^2 commutes with every permutation-symmetric Hamiltonian.
    """
    ops = build_full_space(n)
    dim = 1 << n
    states = np.arange(dim)
    sigma_y = np.zeros((dim, dim), dtype=complex)
    for i in range(n):
        bit = (states >> (n - 1 - i)) & 1
        flipped = states ^ (1 << (n - 1 - i))
        sigma_y[flipped, states] += 1j * (1.0 - 2.0 * bit)
    sx = ops.sigma_x_total
    s2 = sx @ sx + (sigma_y @ sigma_y).real
    s2[np.diag_indices(dim)] += ops.sigma_z_total**2
    return s2


def symmetric_isometry(n: int) -> np.ndarray:
    """Isometry P (2^n x (n+1)) mapping |w> to the symmetrized basis state.

    Column w is the normalized uniform superposition over all bitstrings with
    w set bits (w flipped spins).
    """
    dim = 1 << n
    states = np.arange(dim)
    popcount = np.array([bin(s).count("1") for s in states])
    p = np.zeros((dim, n + 1))
    for w in range(n + 1):
        mask = popcount == w
        p[mask, w] = 1.0 / np.sqrt(mask.sum())
    return p


def symmetric_state(n: int, w: int) -> np.ndarray:
    """Normalized symmetrized |w> state in the 2^n computational basis."""
    if not 0 <= w <= n:
        raise ValueError(f"w must be in 0..{n}, got {w}")
    return symmetric_isometry(n)[:, w]
