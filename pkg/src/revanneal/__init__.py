"""Reverse quantum annealing of the ferromagnetic p-spin model.

Closed (unitary) and open (dephasing-induced relaxation) dynamics in the
maximal-spin sector or the full qubit space, with Monte Carlo wavefunction
trajectories, a dense master-equation oracle, pausing, and sweep tooling.
"""

__version__ = "0.1.0"

from .closed import evolve_unitary, success_probability, sweep_unitary
from .dissipation import BathSpec, DaviesBundle, build_bundle, gamma_zero, rate
from .hamiltonian import (
    ProblemSpec,
    SpectralGrid,
    build_h,
    decompose,
    dump_spectrum,
    min_gap_scan,
)
from .operators import (
    CollectiveOperators,
    DickeSector,
    FullSpaceOperators,
    build_dicke_sector,
    build_full_space,
    symmetric_isometry,
    symmetric_state,
)
from .results import SweepPoint, SweepResult
from .schedule import AnnealPath, PathKind, ScheduleCurves, load_schedule, s_of_t
from .trajectories import (
    EnsembleResult,
    OpenSystemContext,
    average,
    hold_fixed_s,
    initial_state,
    lindblad_oracle,
    run_trajectory,
    sweep_open,
    w_of_m0,
)

__all__ = [name for name in dir() if not name.startswith("_")]
