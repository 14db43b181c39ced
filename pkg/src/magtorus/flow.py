"""Fixed-step RK4 integration of the magnetic Euler-Lagrange flow."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .lagrangian import MagneticLagrangian, PhaseState


@dataclass
class Trajectory:
    """Samples of the flow.  ``lifted`` holds unreduced positions; the reduced
    position is ``lifted mod 1`` and the winding is ``floor(lifted)`` relative
    to the start."""

    t: np.ndarray
    lifted: np.ndarray  # (N, 2)
    v: np.ndarray  # (N, 2)
    step: float

    def __len__(self):
        return self.t.size

    @property
    def position(self) -> np.ndarray:
        return self.lifted - np.floor(self.lifted)

    @property
    def winding(self) -> np.ndarray:
        return (np.floor(self.lifted) - np.floor(self.lifted[0])).astype(np.int64)

    def state(self, i: int) -> PhaseState:
        x, y = self.position[i]
        return PhaseState.of(x, y, *self.v[i])

    def energies(self) -> np.ndarray:
        return 0.5 * (self.v ** 2).sum(axis=1)

    def write_csv(self, path) -> None:
        pos, wind = self.position, self.winding
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "x", "y", "v1", "v2", "w1", "w2"])
            for i in range(len(self)):
                w.writerow([repr(float(self.t[i])), repr(float(pos[i, 0])), repr(float(pos[i, 1])),
                            repr(float(self.v[i, 0])), repr(float(self.v[i, 1])),
                            int(wind[i, 0]), int(wind[i, 1])])


def _rhs(lag: MagneticLagrangian, z: np.ndarray) -> np.ndarray:
    b = float(lag.eta.curl(z[0], z[1]))
    # vdot = -B J v with J(v1, v2) = (-v2, v1)
    return np.array([z[2], z[3], b * z[3], -b * z[2]])


def integrate(lag: MagneticLagrangian, s0: PhaseState, T: float, h: float,
              backward: bool = False) -> Trajectory:
    """Classical RK4 with ``ceil(T / h)`` steps of size ``h`` (negated when
    ``backward``), so the final time lies in ``[T, T + h)``."""
    if not (math.isfinite(T) and T > 0):
        raise ValueError("T must be positive")
    if not (math.isfinite(h) and 0 < h <= T):
        raise ValueError("step must satisfy 0 < h <= T")
    z = np.array([s0.q.x, s0.q.y, s0.v.v1, s0.v.v2], dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("initial state must be finite")
    steps = max(1, int(math.ceil(T / h - 1e-9)))
    dt = -h if backward else h
    out = np.empty((steps + 1, 4))
    out[0] = z
    for i in range(steps):
        k1 = _rhs(lag, z)
        k2 = _rhs(lag, z + 0.5 * dt * k1)
        k3 = _rhs(lag, z + 0.5 * dt * k2)
        k4 = _rhs(lag, z + dt * k3)
        z = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i + 1] = z
    t = np.arange(steps + 1) * dt
    return Trajectory(t, out[:, :2], out[:, 2:], h)


def energy_drift(tr: Trajectory) -> float:
    if len(tr) == 0:
        raise ValueError("empty trajectory")
    e = tr.energies()
    return float(np.abs(e - e[0]).max())
