"""Annealing paths s(t) and energy-scale curves A(s), B(s).

Times are in ns.  Schedule values are in GHz (ordinary frequency, hbar = 1);
conversion to angular frequency happens in a single place, GHZ_TO_RAD_NS,
used by the Hamiltonian assembly.
"""

import enum
import importlib.resources
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

GHZ_TO_RAD_NS = 2.0 * np.pi

# required separation of the energy scales at the endpoints
ENDPOINT_RATIO = 10.0

BUILTIN_LINEAR_A0_GHZ = 10.0
BUILTIN_LINEAR_B0_GHZ = 10.0


class PathKind(str, enum.Enum):
    FORWARD = "forward"
    REVERSE = "reverse"
    REVERSE_PAUSED = "reverse_paused"


@dataclass(frozen=True)
class AnnealPath:
    """Piecewise-linear annealing fraction.

    For reverse kinds the inversion time is tied to the inversion point by
    t_inv = tau * (1 - s_inv), unless fixed_midpoint_inversion is set, in
    which case t_inv = tau / 2 (equal slopes on both branches).
    """

    tau: float  # sweep time, pause excluded
    kind: PathKind = PathKind.FORWARD
    s_inv: float = 1.0
    t_pause: float = 0.0
    fixed_midpoint_inversion: bool = False

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.t_pause < 0:
            raise ValueError(f"t_pause must be >= 0, got {self.t_pause}")
        if self.kind is not PathKind.FORWARD and not 0.0 < self.s_inv < 1.0:
            raise ValueError(f"s_inv must lie strictly in (0, 1), got {self.s_inv}")
        if self.kind is PathKind.FORWARD and self.t_pause != 0.0:
            raise ValueError("forward paths do not support a pause")
        if self.kind is PathKind.REVERSE and self.t_pause != 0.0:
            raise ValueError("use kind=reverse_paused for a paused reverse anneal")

    @property
    def t_inv(self) -> float:
        if self.fixed_midpoint_inversion:
            return self.tau / 2.0
        return self.tau * (1.0 - self.s_inv)

    @property
    def total_time(self) -> float:
        """tau' = tau + t_pause."""
        return self.tau + self.t_pause

    def s_of_t(self, t: float) -> float:
        """Annealing fraction at time t in [0, tau']."""
        if not 0.0 <= t <= self.total_time + 1e-12:
            raise ValueError(f"t={t} outside [0, {self.total_time}]")
        if self.kind is PathKind.FORWARD:
            return min(t / self.tau, 1.0)
        t_inv = self.t_inv
        if t <= t_inv:
            return 1.0 - (1.0 - self.s_inv) * t / t_inv
        t_asc = t - t_inv - self.t_pause
        if t_asc <= 0.0:  # inside the pause
            return self.s_inv
        t_rise = self.tau - t_inv
        return min(self.s_inv + (1.0 - self.s_inv) * t_asc / t_rise, 1.0)


def s_of_t(path: AnnealPath, t: float) -> float:
    return path.s_of_t(t)


@dataclass(frozen=True)
class ScheduleCurves:
    """A(s), B(s) in GHz, evaluated by shape-preserving cubic interpolation."""

    name: str
    s_grid: np.ndarray
    a_ghz: np.ndarray
    b_ghz: np.ndarray
    _a_interp: PchipInterpolator
    _b_interp: PchipInterpolator

    def a(self, s):
        return self._a_interp(s)

    def b(self, s):
        return self._b_interp(s)

    def __call__(self, s):
        return self.a(s), self.b(s)


def _validate_and_build(name, s, a, b) -> ScheduleCurves:
    s, a, b = map(np.asarray, (s, a, b))
    if s.ndim != 1 or s.size < 2 or a.shape != s.shape or b.shape != s.shape:
        raise ValueError("schedule table must be 1-d columns of equal length")
    if np.any(np.diff(s) <= 0):
        raise ValueError("schedule grid s must be strictly increasing")
    if abs(s[0]) > 1e-12 or abs(s[-1] - 1.0) > 1e-12:
        raise ValueError("schedule grid must cover [0, 1]")
    if np.any(np.diff(a) > 1e-12):
        raise ValueError("A(s) must be non-increasing")
    if np.any(np.diff(b) < -1e-12):
        raise ValueError("B(s) must be non-decreasing")
    tiny = 1e-30
    if a[0] / max(b[0], tiny) <= ENDPOINT_RATIO:
        raise ValueError("schedule must satisfy A(0)/B(0) > 10")
    if b[-1] / max(a[-1], tiny) <= ENDPOINT_RATIO:
        raise ValueError("schedule must satisfy B(1)/A(1) > 10")
    return ScheduleCurves(
        name=name,
        s_grid=s,
        a_ghz=a,
        b_ghz=b,
        _a_interp=PchipInterpolator(s, a),
        _b_interp=PchipInterpolator(s, b),
    )


def _parse_csv(name: str, text: str) -> ScheduleCurves:
    rows = np.genfromtxt(io.StringIO(text), delimiter=",", names=True)
    expected = ("s", "A_GHz", "B_GHz")
    if rows.dtype.names != expected:
        raise ValueError(f"schedule CSV header must be {','.join(expected)}")
    return _validate_and_build(name, rows["s"], rows["A_GHz"], rows["B_GHz"])


def _builtin_linear() -> ScheduleCurves:
    s = np.linspace(0.0, 1.0, 101)
    return _validate_and_build(
        "linear", s, BUILTIN_LINEAR_A0_GHZ * (1.0 - s), BUILTIN_LINEAR_B0_GHZ * s
    )


def _builtin_dw_like() -> ScheduleCurves:
    data = importlib.resources.files("revanneal.data").joinpath("dw_like.csv")
    return _parse_csv("dw-like", data.read_text())


BUILTIN_SCHEDULES = {
    "linear": _builtin_linear,
    "dw-like": _builtin_dw_like,
}


def load_schedule(source) -> ScheduleCurves:
    """Load curves from a builtin name ('linear', 'dw-like') or a CSV path."""
    if isinstance(source, str) and source in BUILTIN_SCHEDULES:
        return BUILTIN_SCHEDULES[source]()
    path = Path(source)
    if not path.exists():
        raise ValueError(
            f"unknown schedule {source!r}: not a builtin "
            f"({', '.join(BUILTIN_SCHEDULES)}) and no such file"
        )
    return _parse_csv(path.stem, path.read_text())
