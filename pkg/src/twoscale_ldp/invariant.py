"""Invariant density of the fast process and the averaged slow dynamics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid, trapezoid

from .errors import WindowTooSmall
from .model import CoefficientSet
from .occupation import GridMeasure
from .paths import Path, time_grid

BOUNDARY_RATIO = 1e-8


@dataclass(frozen=True)
class DensityTable:
    """Normalized invariant density ``p`` tabulated on a uniform grid.

    ``score`` holds ``p'/p`` in closed form; ``norm_error`` bounds the mass
    lost to window truncation plus the trapezoid error of the normalization.
    """

    cs: CoefficientSet
    z: np.ndarray
    values: np.ndarray
    score: np.ndarray
    norm_error: float

    def cdf(self, z) -> np.ndarray:
        """``int_{-inf}^{z} p`` using the table (zero below, one above the window)."""
        c = np.concatenate([[0.0], cumulative_trapezoid(self.values, self.z)])
        c /= c[-1]
        return np.interp(z, self.z, c, left=0.0, right=1.0)

    def score_at(self, z) -> np.ndarray:
        return self.cs.score(z)

    def __call__(self, z) -> np.ndarray:
        return np.interp(z, self.z, self.values, left=0.0, right=0.0)

    def to_rows(self):
        return zip(self.z, self.values, self.score)


def log_unnormalized(cs: CoefficientSet, z: np.ndarray, extra_drift=None) -> np.ndarray:
    """``2 int_0^z (b + extra)/sigma^2 - 2 log sigma`` by cumulative Simpson quadrature.

    ``extra_drift`` (same shape as ``z`` along the last axis) adds a drift
    perturbation; it may be 2-d with one row per time.
    """
    z = np.asarray(z, dtype=float)
    s2 = cs.sigma2(z)
    integrand = 2.0 * cs.b(z) / s2
    if extra_drift is not None:
        integrand = integrand + 2.0 * np.asarray(extra_drift) / s2
    cum = cumulative_simpson(integrand, x=z, axis=-1, initial=0.0)
    # shift so the integral starts at z = 0 (the constant cancels after normalizing,
    # but keeps the exponent small near the origin)
    zero = np.array([np.interp(0.0, z, row) for row in np.atleast_2d(cum)])
    if cum.ndim == 1:
        zero = zero[0]
    else:
        zero = zero[:, None]
    return cum - zero - np.log(s2)


def invariant_density(cs: CoefficientSet, z_window=(-8.0, 8.0), step: float = 1e-3) -> DensityTable:
    """Tabulate ``p(z) = const * exp(2 int_0^z b/sigma^2) / sigma^2`` on ``z_window``.

    The exponent is integrated with cumulative Simpson (fourth order), the
    normalization with the trapezoid rule.

    Raises
    ------
    WindowTooSmall
        The density at either boundary exceeds ``1e-8`` of its peak.
    """
    lo, hi = z_window
    n = int(round((hi - lo) / step)) + 1
    z = np.linspace(lo, hi, n)
    logp = log_unnormalized(cs, z)
    logp -= logp.max()
    p = np.exp(logp)
    if max(p[0], p[-1]) > BOUNDARY_RATIO:
        raise WindowTooSmall(
            f"boundary density ratio {max(p[0], p[-1]):.3g} exceeds {BOUNDARY_RATIO:g}; widen z_window"
        )
    total = trapezoid(p, z)
    coarse = trapezoid(p[::2], z[::2]) if (n - 1) % 2 == 0 else trapezoid(p[:-1:2], z[:-1:2])
    p = p / total
    score = cs.score(z)
    tails = 0.0
    for idx, inward in ((0, 1.0), (-1, -1.0)):
        # exponential tail extrapolation: int p(edge) exp(s (z - edge)) over the outside
        s = score[idx] * inward
        tails += p[idx] / s if s > 0 else p[idx] * (hi - lo)
    quad = abs(total - coarse) / (3.0 * total)
    return DensityTable(cs, z, p, score, float(tails + quad))


class AveragedDrift:
    """``x -> int A(x, z) p(z) dz`` by trapezoid quadrature against the table.

    With a ``lattice`` the values are memoized on it and linearly interpolated;
    without one every query is an exact quadrature on the density grid.
    """

    def __init__(self, cs: CoefficientSet, p: DensityTable, lattice=None):
        self.cs, self.p = cs, p
        self.lattice = None if lattice is None else np.asarray(lattice, dtype=float)
        self._table = None if lattice is None else self._exact(self.lattice)

    def _exact(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        for start in range(0, x.size, 256):
            xs = x[start:start + 256]
            vals = self.cs.A(xs[:, None], self.p.z[None, :]) * self.p.values[None, :]
            out[start:start + 256] = trapezoid(vals, self.p.z, axis=1)
        return out

    def __call__(self, x):
        scalar = np.ndim(x) == 0
        if self._table is not None:
            out = np.interp(x, self.lattice, self._table)
        else:
            out = self._exact(x)
        return float(np.squeeze(out)) if scalar else out


def averaged_drift(cs: CoefficientSet, p: DensityTable, lattice=None) -> AveragedDrift:
    return AveragedDrift(cs, p, lattice)


def averaged_ode(cs: CoefficientSet, p: DensityTable, T: float, dt: float, drift=None,
                 method: str = "rk4") -> Path:
    """Solution of ``dX/dt = Abar(X)``, ``X(0) = x0``, by classical RK4.

    ``method="euler"`` uses the explicit Euler step of the simulator instead,
    which makes comparisons with simulated paths free of scheme bias.  The
    derivative table of the returned path is ``Abar`` on the solution.
    """
    if method not in ("rk4", "euler"):
        raise ValueError(f"unknown method {method!r}")
    f = drift if drift is not None else averaged_drift(cs, p)
    t = time_grid(T, dt)
    X = np.empty_like(t)
    X[0] = cs.x0
    for k in range(t.size - 1):
        h = t[k + 1] - t[k]
        x = X[k]
        k1 = f(x)
        if method == "euler":
            X[k + 1] = x + h * k1
            continue
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        X[k + 1] = x + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    return Path(t, X, np.asarray(f(X), dtype=float))


def nu_p(p: DensityTable, T: float, t_cells, z_edges) -> GridMeasure:
    """Product measure ``p(z) dt dz`` on ``[0, T]`` discretized on the given cells.

    ``t_cells`` is either a number of equal time cells or an array of edges.
    The two overflow cells receive the table mass outside ``z_edges``.
    """
    if np.ndim(t_cells) == 0:
        t_edges = np.linspace(0.0, T, int(t_cells) + 1)
    else:
        t_edges = np.asarray(t_cells, dtype=float)
    z_edges = np.asarray(z_edges, dtype=float)
    c = p.cdf(z_edges)
    probs = np.concatenate([[c[0]], np.diff(c), [1.0 - c[-1]]])
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum()
    mass = np.diff(t_edges)[:, None] * probs[None, :]
    return GridMeasure(t_edges, z_edges, mass)
