"""Generate the bundled 'dw-like' schedule table.

The curves follow the qualitative shape of commercial-annealer schedules
(quasi-exponentially decaying transverse scale, convex growing problem
scale).  The two overall scales are calibrated so that the n=20, p=3
instance has its minimal gap at (s, gap) = (0.309, 2.45 GHz), the anchor
used by the acceptance checks.  The transverse decay constant additionally
controls how quickly thermal relaxation freezes out late in the anneal and
was chosen so the open-system plateau of that instance sits near 0.96 at
tau = 100 ns.  Run from the repository root:

    python3 scripts/calibrate_dw_like.py
"""

from pathlib import Path

import numpy as np
from scipy.optimize import fsolve

from revanneal.hamiltonian import ProblemSpec, min_gap_scan
from revanneal.schedule import _validate_and_build

TARGET_S = 0.309
TARGET_GAP_GHZ = 2.45
OUT = Path(__file__).resolve().parent.parent / "src" / "revanneal" / "data" / "dw_like.csv"

S_GRID = np.linspace(0.0, 1.0, 201)


def a_shape(s):
    return (1.0 - s) * np.exp(-8.0 * s)


def b_shape(s):
    return s * (0.3 + 0.7 * s)


def curves_for(ca, cb):
    return _validate_and_build("dw-like", S_GRID, ca * a_shape(S_GRID),
                               cb * b_shape(S_GRID))


def residual(x):
    ca, cb = x
    spec = ProblemSpec(n=20, p=3, curves=curves_for(ca, cb))
    scan = min_gap_scan(spec, ds=2e-3)
    return [scan.s_min - TARGET_S, scan.gap_ghz - TARGET_GAP_GHZ]


def main():
    ca, cb = fsolve(residual, [130.0, 35.0], xtol=1e-10)
    print(f"calibrated: cA={ca:.8f} GHz, cB={cb:.8f} GHz")
    spec = ProblemSpec(n=20, p=3, curves=curves_for(ca, cb))
    scan = min_gap_scan(spec, ds=1e-3)
    print(f"check: s_min={scan.s_min:.6f}, gap={scan.gap_ghz:.6f} GHz")
    a = ca * a_shape(S_GRID)
    b = cb * b_shape(S_GRID)
    lines = ["s,A_GHz,B_GHz"]
    lines += [f"{s:.6f},{x:.9f},{y:.9f}" for s, x, y in zip(S_GRID, a, b)]
    OUT.write_text("\n".join(lines) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
