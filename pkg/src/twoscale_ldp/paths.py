"""Deterministic paths on a time grid."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Path:
    """A slow-component path ``X`` sampled on ``t`` with an optional derivative table.

    When ``Xdot`` is not supplied it is filled in by centred differences with
    second-order one-sided stencils at the ends.
    """

    t: np.ndarray
    X: np.ndarray
    Xdot: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        X = np.asarray(self.X, dtype=float)
        if t.ndim != 1 or X.shape != t.shape:
            raise ValueError("t and X must be 1-d arrays of equal length")
        if t.size < 2 or np.any(np.diff(t) <= 0):
            raise ValueError("t must be strictly increasing with at least two nodes")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "X", X)
        if self.Xdot is None:
            edge = 2 if t.size >= 3 else 1
            object.__setattr__(self, "Xdot", np.gradient(X, t, edge_order=edge))
        else:
            Xdot = np.asarray(self.Xdot, dtype=float)
            if Xdot.shape != t.shape:
                raise ValueError("Xdot must match t")
            object.__setattr__(self, "Xdot", Xdot)

    @property
    def T(self) -> float:
        return float(self.t[-1])

    @classmethod
    def from_function(cls, f, fdot, T: float, dt: float) -> "Path":
        t = time_grid(T, dt)
        return cls(t, f(t), fdot(t))

    def at(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Linearly interpolated ``(X, Xdot)`` at times ``t``."""
        t = np.asarray(t, dtype=float)
        return np.interp(t, self.t, self.X), np.interp(t, self.t, self.Xdot)

    def restrict(self, t_max: float) -> "Path":
        if t_max > self.t[-1] + 1e-12:
            raise ValueError(f"path ends at {self.t[-1]}, cannot restrict to {t_max}")
        keep = self.t < t_max - 1e-12
        X_end, Xd_end = self.at(t_max)
        t = np.append(self.t[keep], t_max)
        return Path(t, np.append(self.X[keep], X_end), np.append(self.Xdot[keep], Xd_end))


def time_grid(T: float, dt: float) -> np.ndarray:
    """Uniform grid ``0, dt, ..., T``; ``T/dt`` is rounded to the nearest integer."""
    if T <= 0 or dt <= 0:
        raise ValueError("T and dt must be positive")
    n = max(1, int(round(T / dt)))
    return np.linspace(0.0, T, n + 1)
