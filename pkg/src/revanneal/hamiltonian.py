"""Annealing Hamiltonian H(s), its spectrum, and the minimal-gap scan.

H(s) = -(A(s)/2) S_x - (B(s) n / 2) (S_z/n)^p with S_alpha sums of Pauli
operators, either in the (n+1)-dimensional maximal-spin sector or in the full
2^n computational space.  Energies are in rad/ns throughout; schedule values
in GHz are converted on assembly.
"""

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import minimize_scalar

from .operators import build_dicke_sector, build_full_space, total_spin_squared
from .schedule import GHZ_TO_RAD_NS, ScheduleCurves

DEGENERACY_THRESHOLD = 1e-12  # rad/ns


@dataclass(frozen=True)
class ProblemSpec:
    """p-spin problem instance bound to a schedule and a working space."""

    n: int
    p: int
    curves: ScheduleCurves
    space: str = "dicke"  # "dicke" | "full"

    def __post_init__(self):
        if self.p < 2:
            raise ValueError(f"p must be >= 2, got {self.p}")
        if self.p > self.n:
            raise ValueError(f"p={self.p} exceeds n={self.n}")
        if self.space not in ("dicke", "full"):
            raise ValueError(f"space must be 'dicke' or 'full', got {self.space!r}")

    @cached_property
    def dim(self) -> int:
        return self.n + 1 if self.space == "dicke" else 1 << self.n

    @cached_property
    def _dicke(self):
        return build_dicke_sector(self.n)

    @cached_property
    def _full(self):
        return build_full_space(self.n)

    @cached_property
    def _s2(self) -> np.ndarray:
        return total_spin_squared(self.n)

    @cached_property
    def _sx(self) -> np.ndarray:
        if self.space == "dicke":
            return self._dicke[1].s_x
        return self._full.sigma_x_total

    @cached_property
    def _mzp_diag(self) -> np.ndarray:
        """Diagonal of (S_z/n)^p in the working basis."""
        if self.space == "dicke":
            return (np.diag(self._dicke[1].s_z) / self.n) ** self.p
        return (self._full.sigma_z_total / self.n) ** self.p

    def coupling_diagonals(self, model: str) -> np.ndarray:
        """Diagonals of the dephasing coupling operator(s), shape (n_ops, dim).

        Collective coupling is the single operator S_z; the independent model
        couples each qubit through its own sigma_z (full space only).
        """
        if model == "collective":
            if self.space == "dicke":
                return np.diag(self._dicke[1].s_z)[None, :]
            return self._full.sigma_z_total[None, :]
        if model == "independent":
            if self.space != "full":
                raise ValueError("independent dephasing requires space='full'")
            return self._full.sigma_z_diags
        raise ValueError(f"unknown dephasing model {model!r}")

    def ground_state_indices(self) -> np.ndarray:
        """Working-basis indices of the s=1 target state(s).

        For odd p the ferromagnetic ground state is the unique all-up state;
        for even p both fully polarized states are counted.
        """
        if self.space == "dicke":
            idx = [0] + ([self.n] if self.p % 2 == 0 else [])
        else:
            idx = [0] + ([(1 << self.n) - 1] if self.p % 2 == 0 else [])
        return np.array(idx)


def build_h(spec: ProblemSpec, s: float) -> np.ndarray:
    """Dense Hermitian H(s) in rad/ns."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [0, 1]")
    a = float(spec.curves.a(s)) * GHZ_TO_RAD_NS
    b = float(spec.curves.b(s)) * GHZ_TO_RAD_NS
    h = (-0.5 * a) * spec._sx.copy()
    h[np.diag_indices_from(h)] += (-0.5 * b * spec.n) * spec._mzp_diag
    return h


@dataclass
class SpectralDecomposition:
    s: float
    energies: np.ndarray  # ascending, rad/ns
    eigenvectors: np.ndarray  # orthonormal columns, aligned with energies

    @property
    def gap(self) -> float:
        return self.energies[1] - self.energies[0]


def _resolve_degenerate_sectors(spec: ProblemSpec, energies: np.ndarray,
                                vecs: np.ndarray, atol: float = 1e-8) -> None:
    """Gauge-fix degenerate eigenspaces to be permutation-sector pure.

    The full-space Hamiltonian has exact degeneracies (for odd p, a chiral
    symmetry pins one zero-energy level per odd-dimension spin sector at every
    s), and eigh mixes such clusters across sectors arbitrarily.  Since S^2
    commutes with H, re-diagonalizing S^2 inside each cluster is a pure gauge
    choice; it restores the block structure of the collective coupling (no
    spurious cross-sector transition elements).  Clusters are ordered by
    descending S^2 so level truncation keeps high-spin states preferentially.
    Modifies `vecs` in place.
    """
    i, m = 0, energies.size
    while i < m:
        j = i + 1
        while j < m and energies[j] - energies[j - 1] <= atol:
            j += 1
        if j - i > 1:
            block = vecs[:, i:j]
            s2 = block.conj().T @ spec._s2 @ block
            _, u = np.linalg.eigh(0.5 * (s2 + s2.conj().T))
            vecs[:, i:j] = block @ u[:, ::-1]
        i = j


def decompose(spec: ProblemSpec, s: float, previous: SpectralDecomposition | None = None):
    """Exact dense eigendecomposition with a positive-overlap continuity gauge.

    When `previous` is given, each eigenvector's sign is flipped if its overlap
    with the corresponding previous-grid-point vector is negative, keeping the
    eigenbasis continuous along a scan.
    """
    h = build_h(spec, s)
    energies, vecs = np.linalg.eigh(h)
    if spec.space == "full":
        _resolve_degenerate_sectors(spec, energies, vecs)
    if previous is not None:
        k = min(vecs.shape[1], previous.eigenvectors.shape[1])
        overlaps = np.einsum(
            "ij,ij->j", previous.eigenvectors[:, :k].conj(), vecs[:, :k]
        ).real
        vecs[:, :k][:, overlaps < 0] *= -1.0
    return SpectralDecomposition(s=s, energies=energies, eigenvectors=vecs)


@dataclass
class GapScanResult:
    s_min: float
    gap: float  # rad/ns
    degenerate: bool

    @property
    def gap_ghz(self) -> float:
        return self.gap / GHZ_TO_RAD_NS


def min_gap_scan(spec: ProblemSpec, ds: float = 1e-3) -> GapScanResult:
    """Locate the minimal E_1 - E_0 gap along s in [0, 1].

    A uniform grid scan brackets the minimum, which is then refined by bounded
    scalar minimization to |ds| < 1e-6.  A gap below the degeneracy threshold
    is reported with a flag instead of an error (even-p final degeneracy).
    """
    grid = np.linspace(0.0, 1.0, int(round(1.0 / ds)) + 1)
    gaps = np.empty_like(grid)
    for i, s in enumerate(grid):
        e = np.linalg.eigvalsh(build_h(spec, s))
        gaps[i] = e[1] - e[0]
    imin = int(np.argmin(gaps))
    lo = grid[max(imin - 1, 0)]
    hi = grid[min(imin + 1, grid.size - 1)]

    def gap_at(s):
        e = np.linalg.eigvalsh(build_h(spec, float(s)))
        return e[1] - e[0]

    res = minimize_scalar(gap_at, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-7})
    s_min, gap = float(res.x), float(res.fun)
    if gap > gaps[imin]:  # refinement should never lose to the grid
        s_min, gap = float(grid[imin]), float(gaps[imin])
    return GapScanResult(s_min=s_min, gap=gap, degenerate=gap < DEGENERACY_THRESHOLD)


def dump_spectrum(spec: ProblemSpec, path, ds: float = 1e-2, levels: int | None = None):
    """Write (s, E_0..E_k) rows in GHz to a CSV file for plotting."""
    levels = levels if levels is not None else min(spec.dim, 8)
    grid = np.linspace(0.0, 1.0, int(round(1.0 / ds)) + 1)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s"] + [f"E{k}_GHz" for k in range(levels)])
        for s in grid:
            e = np.linalg.eigvalsh(build_h(spec, s))[:levels] / GHZ_TO_RAD_NS
            writer.writerow([f"{s:.6f}"] + [f"{x:.9f}" for x in e])


class SpectralGrid:
    """Gauge-fixed eigendecompositions on a uniform s-grid with cell overlaps.

    Nodes sit at cell midpoints (plus exact endpoint nodes at s=0 and s=1).
    `rotation_up[c]` maps eigenbasis coefficients at node c to node c+1; its
    adjoint maps them back.  With `keep` set, only the lowest `keep`
    instantaneous eigenstates are retained (level truncation), in which case
    the rotations are contractions and the lost norm is truncation leakage.
    """

    def __init__(self, spec: ProblemSpec, ds: float = 1e-3, keep: int | None = None):
        self.spec = spec
        self.ncells = int(round(1.0 / ds))
        if abs(self.ncells * ds - 1.0) > 1e-9:
            raise ValueError(f"ds={ds} must divide 1 exactly")
        self.ds = 1.0 / self.ncells
        self.keep = keep if keep is not None else spec.dim
        if not 2 <= self.keep <= spec.dim:
            raise ValueError(f"keep={keep} outside 2..{spec.dim}")

        mids = (np.arange(self.ncells) + 0.5) * self.ds
        self.node_s = mids
        energies = []
        vectors = []
        prev = None
        for s in mids:
            dec = decompose(spec, float(s), previous=prev)
            prev = dec
            energies.append(dec.energies[: self.keep])
            vectors.append(np.ascontiguousarray(dec.eigenvectors[:, : self.keep]))
        self.energies = np.array(energies)  # (ncells, keep)
        self.vectors = vectors  # list of (dim, keep)
        self.rotation_up = [
            vectors[c + 1].conj().T @ vectors[c] for c in range(self.ncells - 1)
        ]
        self.end0 = decompose(spec, 0.0, previous=None)
        self.end1 = decompose(spec, 1.0, previous=None)
        # coefficients in the endpoint eigenbasis -> nearest midpoint basis
        self.from_end0 = vectors[0].conj().T @ self.end0.eigenvectors
        self.from_end1 = vectors[-1].conj().T @ self.end1.eigenvectors

    def cell_of(self, s: float) -> int:
        """Index of the cell whose midpoint node represents s."""
        c = int(np.floor(s / self.ds))
        return min(max(c, 0), self.ncells - 1)

    def boundary_index(self, s: float) -> int:
        """Cell-boundary index for an s that must sit on the cell grid."""
        k = int(round(s / self.ds))
        if abs(k * self.ds - s) > 1e-9:
            raise ValueError(
                f"s={s} does not lie on the ds={self.ds} cell grid"
            )
        return k

    def node_at(self, s: float):
        """On-demand decomposition at an arbitrary s (used for pause points).

        Returns (energies, rotation) where rotation maps coefficients in the
        nearest midpoint-node basis into the pause-node eigenbasis.
        """
        c = self.cell_of(min(s, 1.0 - 1e-12))
        dec = decompose(self.spec, float(s))
        vk = dec.eigenvectors[:, : self.keep]
        rot = vk.conj().T @ self.vectors[c]
        return dec.energies[: self.keep], rot
