"""Weak-coupling dephasing machinery in the instantaneous energy eigenbasis.

The bath is Ohmic, J(omega) = 2 pi eta omega exp(-omega/omega_c), completed to
the two-sided rate gamma(omega) = J(|omega|-shaped form) / (1 - exp(-omega/T)),
the unique detailed-balance completion that makes the Gibbs state stationary.
All frequencies are in rad/ns, rates in 1/ns.

Because the coupling operators are diagonal-in-z and the jump operators are
eigenpair dyads, every dissipative object is diagonal (or elementwise) in the
instantaneous eigenbasis; the per-node data stored here exploits that.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .hamiltonian import ProblemSpec, SpectralGrid, decompose
from .schedule import GHZ_TO_RAD_NS

THZ_TO_RAD_NS = 2.0 * np.pi * 1e3

DEFAULT_ETA = 1e-3
DEFAULT_OMEGA_C_THZ = 1.0
DEFAULT_TEMPERATURE_GHZ = 1.57  # 12.1 mK
DEFAULT_OMEGA_BIN = 1e-8  # rad/ns; Bohr frequencies below this count as zero


@dataclass(frozen=True)
class BathSpec:
    eta: float = DEFAULT_ETA
    omega_c_thz: float = DEFAULT_OMEGA_C_THZ
    temperature_ghz: float = DEFAULT_TEMPERATURE_GHZ
    model: str = "collective"  # "collective" | "independent"
    lamb_shift: bool = True
    omega_bin: float = DEFAULT_OMEGA_BIN

    def __post_init__(self):
        if self.eta <= 0 or self.omega_c_thz <= 0 or self.temperature_ghz <= 0:
            raise ValueError("eta, omega_c and temperature must all be positive")
        if self.model not in ("collective", "independent"):
            raise ValueError(f"unknown dephasing model {self.model!r}")

    @property
    def omega_c(self) -> float:
        """Cutoff in rad/ns."""
        return self.omega_c_thz * THZ_TO_RAD_NS

    @property
    def temperature(self) -> float:
        """Temperature in rad/ns (k_B = hbar = 1)."""
        return self.temperature_ghz * GHZ_TO_RAD_NS


def rate(omega, bath: BathSpec):
    """Two-sided jump/dephasing rate gamma(omega) in 1/ns.

    gamma(omega) = 2 pi eta omega exp(-|omega|/omega_c) / (1 - exp(-omega/T))
    with the analytic zero-frequency limit gamma(0) = 2 pi eta T.  Satisfies
    the detailed-balance identity gamma(-omega) = exp(-omega/T) gamma(omega).
    """
    omega = np.asarray(omega, dtype=float)
    t = bath.temperature
    pref = 2.0 * np.pi * bath.eta
    absw = np.abs(omega)
    envelope = np.exp(-absw / bath.omega_c)
    # branch on the sign so the Bose factor never overflows
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        pos = pref * absw * envelope / -np.expm1(-absw / t)
        neg = pref * absw * envelope / np.expm1(absw / t)
    gamma0 = pref * t
    out = np.where(omega > 0, pos, neg)
    out = np.where(absw < bath.omega_bin, gamma0, out)
    out = np.where(np.isfinite(out), out, 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def gamma_zero(bath: BathSpec) -> float:
    """Zero-frequency (dephasing) rate gamma_0 = 2 pi eta T."""
    return 2.0 * np.pi * bath.eta * bath.temperature


_LAMB_CACHE: dict = {}


def lamb_shift_table(bath: BathSpec, omega_max: float, points: int = 1601):
    """Principal-value transform S(omega) = (1/2pi) P int gamma(w)/(omega-w) dw.

    Tabulated on [-omega_max, omega_max] and returned as a cubic spline.  The
    singularity is removed by subtracting gamma(omega) and integrating the
    smooth remainder; the subtracted term integrates to a closed-form log.
    Tables are cached per bath, with omega_max rounded up for cache reuse.
    """
    omega_max = 2.0 ** np.ceil(np.log2(max(omega_max, 1.0)))
    key = (bath.eta, bath.omega_c_thz, bath.temperature_ghz, omega_max, points)
    cached = _LAMB_CACHE.get(key)
    if cached is not None:
        return cached
    cut = 20.0 * bath.omega_c
    core = max(4.0 * omega_max, 50.0 * bath.temperature)
    core = min(core, cut)
    x = np.concatenate([
        np.linspace(-cut, -core, 400, endpoint=False),
        np.linspace(-core, core, 12001, endpoint=False),
        np.linspace(core, cut, 401),
    ])
    gx = rate(x, bath)
    targets = np.linspace(-omega_max, omega_max, points)
    values = np.empty_like(targets)
    for i0 in range(0, targets.size, 128):
        w = targets[i0:i0 + 128, None]
        gw = rate(w[:, 0], bath)[:, None]
        diff = w - x[None, :]
        # the removable point: integrand tends to -gamma'(omega)
        tiny = np.abs(diff) < 1e-9
        integrand = np.where(tiny, 0.0, (gx[None, :] - gw) / np.where(tiny, 1.0, diff))
        pv = np.trapezoid(integrand, x, axis=1)
        pv += gw[:, 0] * np.log((cut + w[:, 0]) / (cut - w[:, 0]))
        values[i0:i0 + 128] = pv / (2.0 * np.pi)
    spline = CubicSpline(targets, values)
    _LAMB_CACHE[key] = spline
    return spline


@dataclass
class DaviesBundle:
    """Dissipative data at one annealing fraction, in the energy eigenbasis.

    Jump channels connect ordered eigenpairs (a, b) with weight
    W[a, b] = gamma(E_b - E_a) * sum_i M_i[a, b]^2 where M_i = <E_a|C_i|E_b>
    for coupling diagonal(s) C_i.  The zero-frequency channel applies the
    eigenbasis-diagonal part of each coupling operator with rate gamma_0.
    """

    s: float
    energies: np.ndarray  # (k,) rad/ns
    vectors: np.ndarray  # (dim, k), real
    transfer: np.ndarray  # W, (k, k), zero diagonal, 1/ns
    diag_elements: np.ndarray  # d_i[a] = <E_a|C_i|E_a>, (n_ops, k)
    lamb_diag: np.ndarray  # (k,), rad/ns, zero when the Lamb shift is off
    gamma0: float
    bath: BathSpec = field(repr=False)

    @property
    def decay_out(self) -> np.ndarray:
        """Total transfer rate out of each eigenstate, w[b] = sum_a W[a, b]."""
        return self.transfer.sum(axis=0)

    @property
    def dephasing_weight(self) -> np.ndarray:
        """gamma_0 * sum_i d_i[a]^2 per eigenstate (unshifted form)."""
        return self.gamma0 * (self.diag_elements**2).sum(axis=0)

    def effective_hamiltonian(self, h: np.ndarray | None = None) -> np.ndarray:
        """Non-Hermitian trajectory generator, dense in the working basis.

        H_eff = H + H_LS - (i/2) sum_{a!=b} gamma_ab L_ab^+ L_ab
                      - (i/2) gamma_0 sum_i (sum_a L_aa,i)^+ (sum_b L_bb,i)
        which is diagonal in the eigenbasis: every L^+L product collapses onto
        |E_b><E_b| with weight |M_ab|^2.
        """
        v = self.vectors
        if h is None:
            h = v @ np.diag(self.energies) @ v.conj().T
        lam = self.lamb_diag - 0.5j * (self.decay_out + self.dephasing_weight)
        return h + (v * lam[None, :]) @ v.conj().T

    def apply_generator(self, rho: np.ndarray) -> np.ndarray:
        """Action of the full master-equation generator on a density matrix."""
        v = self.vectors
        rt = v.conj().T @ rho @ v
        eps = self.energies + self.lamb_diag
        out = -1j * (eps[:, None] - eps[None, :]) * rt
        pops = np.real(np.diag(rt))
        out[np.diag_indices_from(out)] += self.transfer @ pops
        w = self.decay_out
        out -= 0.5 * (w[:, None] + w[None, :]) * rt
        d = self.diag_elements
        deph = -0.5 * self.gamma0 * ((d[:, :, None] - d[:, None, :]) ** 2).sum(axis=0)
        out += deph * rt
        return v @ out @ v.conj().T

    def generator_matrix(self) -> np.ndarray:
        """Dense superoperator (dim^2 x dim^2) of apply_generator."""
        dim = self.vectors.shape[0]
        sup = np.empty((dim * dim, dim * dim), dtype=complex)
        basis = np.zeros((dim, dim), dtype=complex)
        for k in range(dim * dim):
            basis.flat[k] = 1.0
            sup[:, k] = self.apply_generator(basis).ravel()
            basis.flat[k] = 0.0
        return sup

    def gibbs_state(self) -> np.ndarray:
        """Gibbs state of H(s) at the bath temperature, in the working basis."""
        beta_e = self.energies / self.bath.temperature
        pops = np.exp(-(beta_e - beta_e.min()))
        pops /= pops.sum()
        v = self.vectors
        return (v * pops[None, :]) @ v.conj().T


def _transfer_and_diag(energies, vectors, coupling_diags, bath):
    k = energies.size
    msq = np.zeros((k, k))
    diag_elements = np.empty((coupling_diags.shape[0], k))
    for i, z in enumerate(coupling_diags):
        m = vectors.conj().T @ (z[:, None] * vectors)
        msq += np.abs(m) ** 2
        diag_elements[i] = np.real(np.diag(m))
    omegas = energies[None, :] - energies[:, None]  # omega_ab = E_b - E_a
    w = rate(omegas, bath) * msq
    np.fill_diagonal(w, 0.0)
    return w, diag_elements


def build_bundle(spec: ProblemSpec, s: float, bath: BathSpec,
                 keep: int | None = None) -> DaviesBundle:
    """Davies data at a single annealing fraction (convenience for tests and
    fixed-s relaxation runs; sweeps use BundleGrid)."""
    dec = decompose(spec, s)
    k = keep if keep is not None else spec.dim
    energies = dec.energies[:k]
    vectors = dec.eigenvectors[:, :k]
    coupling = spec.coupling_diagonals(bath.model)
    w, d = _transfer_and_diag(energies, vectors, coupling, bath)
    if bath.lamb_shift:
        omega_max = float(energies[-1] - energies[0]) + 1.0
        shift = lamb_shift_table(bath, omega_max)
        lamb = _lamb_diag(energies, vectors, coupling, shift)
    else:
        lamb = np.zeros(k)
    return DaviesBundle(s=s, energies=energies, vectors=vectors, transfer=w,
                        diag_elements=d, lamb_diag=lamb, gamma0=gamma_zero(bath),
                        bath=bath)


def _lamb_diag(energies, vectors, coupling_diags, shift_spline):
    k = energies.size
    omegas = energies[None, :] - energies[:, None]
    s_of_omega = shift_spline(omegas)
    lamb = np.zeros(k)
    for z in coupling_diags:
        m = vectors.conj().T @ (z[:, None] * vectors)
        lamb += (s_of_omega * np.abs(m) ** 2).sum(axis=0)
    return lamb


class BundleGrid:
    """Per-node dissipative data over a SpectralGrid.

    For each midpoint node this stores the eigenbasis-diagonal complex
    generator lambda_eff (energy + Lamb shift - i * decay/2), the transfer
    weight matrix W, and the shifted dephasing diagonals used by the
    trajectory unravelling.  The dephasing jump operators are shifted by a
    multiple of the identity per node (c_i = d_i[ground state]), which leaves
    the master equation invariant but drastically lowers the jump rate.
    """

    def __init__(self, grid: SpectralGrid, bath: BathSpec,
                 dephasing_shift: bool = True):
        self.grid = grid
        self.bath = bath
        self.gamma0 = gamma_zero(bath)
        spec = grid.spec
        coupling = spec.coupling_diagonals(bath.model)
        n_nodes = grid.ncells
        k = grid.keep

        if bath.lamb_shift:
            omega_max = float(np.max(grid.energies[:, -1] - grid.energies[:, 0])) + 1.0
            shift = lamb_shift_table(bath, omega_max)
        else:
            shift = None

        self.transfer = np.empty((n_nodes, k, k))
        self.deph_diags = np.empty((n_nodes, coupling.shape[0], k))
        self.lamb = np.zeros((n_nodes, k))
        self.lambda_eff = np.empty((n_nodes, k), dtype=complex)
        for c in range(n_nodes):
            e = grid.energies[c]
            v = grid.vectors[c]
            w, d = _transfer_and_diag(e, v, coupling, bath)
            if shift is not None:
                self.lamb[c] = _lamb_diag(e, v, coupling, shift)
            if dephasing_shift:
                d = d - d[:, :1]  # subtract each operator's ground-state element
            self.deph_diags[c] = d
            gamma_deph = self.gamma0 * (d**2).sum(axis=0)
            self.lambda_eff[c] = (
                e + self.lamb[c] - 0.5j * (w.sum(axis=0) + gamma_deph)
            )
            self.transfer[c] = w

    def node_bundle(self, s: float) -> DaviesBundle:
        """Fresh (unshifted) bundle at an arbitrary s, truncated like the grid."""
        bundle = build_bundle(self.grid.spec, s, self.bath, keep=self.grid.keep)
        return bundle
