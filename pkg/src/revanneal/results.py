"""Sweep result containers and CSV persistence."""

import csv
import json
from dataclasses import dataclass, field


@dataclass
class SweepPoint:
    m0: float
    s_inv: float
    p0: float
    stderr: float = 0.0
    n_traj: int = 1


@dataclass
class SweepResult:
    points: list[SweepPoint] = field(default_factory=list)

    def add(self, point: SweepPoint):
        self.points.append(point)

    def m0_values(self):
        seen = []
        for pt in self.points:
            if pt.m0 not in seen:
                seen.append(pt.m0)
        return seen

    def curve(self, m0: float):
        """(s_inv, p0, stderr) arrays for one initial magnetization."""
        pts = sorted((p for p in self.points if p.m0 == m0), key=lambda p: p.s_inv)
        return ([p.s_inv for p in pts], [p.p0 for p in pts], [p.stderr for p in pts])

    def max_p0(self, m0: float) -> SweepPoint:
        pts = [p for p in self.points if p.m0 == m0]
        return max(pts, key=lambda p: p.p0)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["m0", "s_inv", "P0", "stderr", "K"])
            for p in sorted(self.points, key=lambda q: (q.m0, q.s_inv)):
                writer.writerow([
                    f"{p.m0:.6f}", f"{p.s_inv:.6f}", f"{p.p0:.10f}",
                    f"{p.stderr:.10f}", p.n_traj,
                ])

    @classmethod
    def from_csv(cls, path):
        result = cls()
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                result.add(SweepPoint(
                    m0=float(row["m0"]), s_inv=float(row["s_inv"]),
                    p0=float(row["P0"]), stderr=float(row["stderr"]),
                    n_traj=int(row["K"]),
                ))
        return result

    def to_plot_dat(self, path):
        """Gnuplot-style block data: one (s_inv, P0, stderr) block per m0."""
        with open(path, "w") as fh:
            for m0 in self.m0_values():
                fh.write(f"# m0 = {m0}\n")
                for s, p0, err in zip(*self.curve(m0)):
                    fh.write(f"{s:.6f} {p0:.10f} {err:.10f}\n")
                fh.write("\n\n")


def write_manifest(path, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
