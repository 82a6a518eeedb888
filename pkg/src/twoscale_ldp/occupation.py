"""Occupation measures on ``[0, T] x R`` and the metrics used to compare them.

A :class:`GridMeasure` stores masses on (time cell) x (z cell) rectangles.
The z axis is cut by ``z_edges`` into interior cells plus two overflow cells,
``(-inf, z_edges[0])`` and ``[z_edges[-1], inf)``.  Inside an interior cell
the mass is treated as uniform in ``t`` and ``z``; overflow mass is treated
as sitting on the nearest edge.  Both conventions are used consistently by
the CDF, the averaged coefficients and the tail diagnostics.

The measure metric is the Levy-type CDF distance: the smallest ``q`` with
``F1(t-q, z-q) - q <= F2(t, z) <= F1(t+q, z+q) + q`` at all corner points,
symmetrized.  It is not the exact Levy-Prokhorov distance over Borel sets.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .paths import Path

ROW_TOL = 1e-12
LP_TOL = 1e-4


@dataclass(frozen=True)
class GridMeasure:
    t_edges: np.ndarray
    z_edges: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t_edges, dtype=float)
        z = np.asarray(self.z_edges, dtype=float)
        m = np.asarray(self.mass, dtype=float)
        if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0):
            raise ValueError("t_edges must be strictly increasing")
        if z.ndim != 1 or z.size < 1 or np.any(np.diff(z) <= 0):
            raise ValueError("z_edges must be strictly increasing")
        if m.shape != (t.size - 1, z.size + 1):
            raise ValueError(f"mass must have shape {(t.size - 1, z.size + 1)}, got {m.shape}")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise ValueError("mass must be finite and nonnegative")
        object.__setattr__(self, "t_edges", t)
        object.__setattr__(self, "z_edges", z)
        object.__setattr__(self, "mass", m)

    @property
    def T(self) -> float:
        return float(self.t_edges[-1] - self.t_edges[0])

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.t_edges)

    @property
    def z_rep(self) -> np.ndarray:
        """Representative z per column: edges for overflow cells, midpoints inside."""
        z = self.z_edges
        return np.concatenate([[z[0]], 0.5 * (z[1:] + z[:-1]), [z[-1]]])

    @property
    def kernel(self) -> np.ndarray:
        """Row-normalized masses, the probabilistic kernel per time cell."""
        rows = self.mass.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(rows > 0, self.mass / rows, 0.0)

    def total(self) -> float:
        return float(self.mass.sum())

    def normalized(self) -> "GridMeasure":
        """Rescale each row to the width of its time cell."""
        rows = self.mass.sum(axis=1)
        if np.any(rows <= 0):
            raise ValueError("cannot normalize an empty time row")
        return GridMeasure(self.t_edges, self.z_edges, self.mass * (self.dt / rows)[:, None])

    def row_error(self) -> float:
        return float(np.max(np.abs(self.mass.sum(axis=1) - self.dt)))

    def cell_of(self, t) -> np.ndarray:
        """Index of the time cell containing each ``t`` (``T`` belongs to the last cell)."""
        idx = np.searchsorted(self.t_edges, t, side="right") - 1
        return np.clip(idx, 0, self.t_edges.size - 2)

    def restrict(self, t_max: float) -> "GridMeasure":
        """Restriction to ``[t_edges[0], t_max]``, splitting a cell proportionally."""
        if t_max > self.t_edges[-1] + 1e-12:
            raise ValueError(f"measure ends at {self.t_edges[-1]}, cannot restrict to {t_max}")
        if t_max <= self.t_edges[0]:
            raise ValueError("restriction interval is empty")
        keep = int(np.searchsorted(self.t_edges, t_max - 1e-12, side="left"))
        edges = np.append(self.t_edges[:keep], t_max)
        mass = self.mass[:keep].copy()
        frac = (t_max - self.t_edges[keep - 1]) / (self.t_edges[keep] - self.t_edges[keep - 1])
        mass[-1] *= frac
        return GridMeasure(edges, self.z_edges, mass)

    # -- CDF machinery -----------------------------------------------------

    def _time_fractions(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)[:, None]
        lo, w = self.t_edges[:-1][None, :], self.dt[None, :]
        return np.clip((t - lo) / w, 0.0, 1.0)

    def _z_fractions(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)[:, None]
        e = self.z_edges
        out = np.empty((z.shape[0], e.size + 1))
        out[:, :1] = z >= e[0]
        if e.size > 1:
            lo, w = e[:-1][None, :], np.diff(e)[None, :]
            with np.errstate(invalid="ignore"):
                frac = (z - lo) / w
            frac = np.where(np.isposinf(z), 1.0, np.where(np.isneginf(z), 0.0, frac))
            out[:, 1:-1] = np.clip(frac, 0.0, 1.0)
        out[:, -1:] = z >= e[-1]
        return out

    def cdf_at(self, t, z) -> np.ndarray:
        """``F(t_a, z_b) = nu([0, t_a] x (-inf, z_b])`` for all pairs (outer product)."""
        return self._time_fractions(t) @ self.mass @ self._z_fractions(z).T


@dataclass(frozen=True)
class CdfTable:
    t_edges: np.ndarray
    z_corners: np.ndarray
    F: np.ndarray


def cdf(m: GridMeasure) -> CdfTable:
    """Cumulative double sum at cell corners; the last z corner is ``+inf``."""
    col = np.cumsum(m.mass, axis=1)
    F_edges = col[:, :-1].copy()
    F_edges[:, -1] = col[:, -1]  # right overflow sits on the last edge
    F = np.concatenate([F_edges, col[:, -1:]], axis=1)
    F = np.vstack([np.zeros((1, F.shape[1])), np.cumsum(F, axis=0)])
    z_corners = np.append(m.z_edges, np.inf)
    return CdfTable(m.t_edges, z_corners, F)


def occupation_measure(pp, t_edges, z_edges, dt: float | None = None) -> GridMeasure:
    """Occupation measure of a fast path (left-endpoint rule, rows renormalized).

    ``pp`` is a :class:`~twoscale_ldp.simulate.PathPair` or any object with
    ``t_grid`` and ``xi``; a 2-d ``xi`` (replicas x nodes) is not accepted here,
    see :func:`occupation_batch`.
    """
    t = np.asarray(pp.t_grid, dtype=float)
    xi = np.asarray(pp.xi, dtype=float)
    return occupation_batch(t, xi[None, :], t_edges, z_edges)[0]


def occupation_batch(t, xi, t_edges, z_edges) -> list[GridMeasure]:
    """Occupation measures for a batch of fast paths ``xi[replica, node]``."""
    t_edges = np.asarray(t_edges, dtype=float)
    z_edges = np.asarray(z_edges, dtype=float)
    if t[0] > t_edges[0] + 1e-12 or t[-1] < t_edges[-1] - 1e-12:
        raise ValueError("path does not cover the time cells")
    w = np.diff(t)
    nodes = t[:-1]
    inside = (nodes >= t_edges[0] - 1e-12) & (nodes < t_edges[-1] - 1e-12)
    ti = np.clip(np.searchsorted(t_edges, nodes[inside] + 1e-12, side="right") - 1, 0, t_edges.size - 2)
    zi = np.searchsorted(z_edges, xi[:, :-1][:, inside], side="right")
    nt, nz = t_edges.size - 1, z_edges.size + 1
    R = xi.shape[0]
    flat = (np.arange(R)[:, None] * nt + ti[None, :]) * nz + zi
    weights = np.broadcast_to(w[inside], flat.shape)
    mass = np.bincount(flat.ravel(), weights=weights.ravel(), minlength=R * nt * nz).reshape(R, nt, nz)
    rows = mass.sum(axis=2, keepdims=True)
    mass = mass * (np.diff(t_edges)[None, :, None] / np.where(rows > 0, rows, 1.0))
    return [GridMeasure(t_edges, z_edges, mass[r]) for r in range(R)]


# ---------------------------------------------------------------------------
# metrics


def _corners(m1: GridMeasure, m2: GridMeasure):
    t = np.union1d(m1.t_edges, m2.t_edges)
    z = np.append(np.union1d(m1.z_edges, m2.z_edges), np.inf)
    return t, z


def _sandwiched(m_ref: GridMeasure, F_other: np.ndarray, t, z, q: float, slack=1e-12) -> bool:
    lower = m_ref.cdf_at(t - q, z - q) - q
    upper = m_ref.cdf_at(t + q, z + q) + q
    return bool(np.all(lower <= F_other + slack) and np.all(F_other <= upper + slack))


def _one_sided(m_ref, m_other, t, z, tol):
    F_other = m_other.cdf_at(t, z)
    if _sandwiched(m_ref, F_other, t, z, 0.0):
        return 0.0
    lo, hi = 0.0, max(m_ref.total(), m_other.total(), tol)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _sandwiched(m_ref, F_other, t, z, mid):
            hi = mid
        else:
            lo = mid
    return hi


def lp_distance(m1: GridMeasure, m2: GridMeasure, tol: float = LP_TOL) -> float:
    """Levy-type CDF distance between two grid measures, by bisection to ``tol``."""
    t, z = _corners(m1, m2)
    return max(_one_sided(m1, m2, t, z, tol), _one_sided(m2, m1, t, z, tol))


def lp_within(m1: GridMeasure, m2: GridMeasure, q: float) -> bool:
    """``lp_distance(m1, m2) <= q`` up to the bisection tolerance, with one evaluation."""
    if q < 0:
        return False
    t, z = _corners(m1, m2)
    return _sandwiched(m1, m2.cdf_at(t, z), t, z, q) and _sandwiched(m2, m1.cdf_at(t, z), t, z, q)


def uniform_distance(X1, X2) -> float:
    """``max_t |X1(t) - X2(t)|`` over the common time range.

    Accepts :class:`Path` objects or ``(t, X)`` pairs; different grids are
    merged and both paths interpolated linearly.
    """
    t1, x1 = (X1.t, X1.X) if isinstance(X1, Path) else X1
    t2, x2 = (X2.t, X2.X) if isinstance(X2, Path) else X2
    t1, x1, t2, x2 = map(np.asarray, (t1, x1, t2, x2))
    if t1.shape == t2.shape and np.array_equal(t1, t2):
        return float(np.max(np.abs(x1 - x2)))
    lo, hi = max(t1[0], t2[0]), min(t1[-1], t2[-1])
    t = np.union1d(t1, t2)
    t = t[(t >= lo) & (t <= hi)]
    return float(np.max(np.abs(np.interp(t, t1, x1) - np.interp(t, t2, x2))))


def composite_metric(X1: Path, m1: GridMeasure, X2: Path, m2: GridMeasure, K: int = 10,
                     tol: float = LP_TOL) -> dict:
    """Truncated metric ``sum_k min(r_k, 2^-k) + sum_k min(rho_k, 2^-k)``, ``k <= K``.

    ``r_k`` and ``rho_k`` use restrictions to ``[0, k]``; the omitted terms
    contribute at most ``2^(1-K)``.  Inputs must cover ``[0, K]``.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    path_part = meas_part = 0.0
    for k in range(1, K + 1):
        w = 2.0 ** -k
        r = uniform_distance(X1.restrict(k), X2.restrict(k))
        rho = lp_distance(m1.restrict(k), m2.restrict(k), tol)
        path_part += min(r, w)
        meas_part += min(rho, w)
    return {"value": path_part + meas_part, "path": path_part, "measure": meas_part,
            "truncation_error": 2.0 ** (1 - K)}


# ---------------------------------------------------------------------------
# tails and compact-containment diagnostics


def tail_mass(m: GridMeasure, c: float) -> float:
    """``nu([0,T] x {|z| > c})``; overflow cells always count as tail mass."""
    if c < 0:
        raise ValueError("c must be nonnegative")
    e = m.z_edges
    lo, hi = e[:-1], e[1:]
    inside = np.clip(np.minimum(hi, c) - np.maximum(lo, -c), 0.0, None)
    frac = 1.0 - inside / (hi - lo)
    cols = m.mass.sum(axis=0)
    return float(cols[0] + cols[-1] + np.dot(cols[1:-1], frac))


@dataclass(frozen=True)
class UProfile:
    """Nonnegative C^2 test function with tabulated first and second derivatives."""

    u: callable
    du: callable
    d2u: callable


def default_u_profile() -> UProfile:
    """``z^2/2`` on ``|z| <= 1`` and ``|z| - 1/2`` outside."""
    return UProfile(
        u=lambda z: np.where(np.abs(z) <= 1, 0.5 * z * z, np.abs(z) - 0.5),
        du=lambda z: np.where(np.abs(z) <= 1, z, np.sign(z)),
        d2u=lambda z: np.where(np.abs(z) <= 1, 1.0, 0.0),
    )


def g_function(cs, u_profile: UProfile | None = None, z_max: float = 50.0, step: float = 0.01):
    """``g(y) = (inf_{y < |z| <= z_max} [sup Du - Du(z)])^(-1/2)`` as a callable.

    Returns ``inf`` where the bracket's infimum is not positive.
    """
    from .rate import D_operator

    u = u_profile or default_u_profile()
    z = np.arange(-z_max, z_max + 0.5 * step, step)
    Du = D_operator(z, u.du(z), u.d2u(z), cs)
    bracket = Du.max() - Du
    az = np.abs(z)

    def g(y):
        sel = az > y
        if not np.any(sel):
            return 0.0
        low = bracket[sel].min()
        return np.inf if low <= 0 else float(low ** -0.5)

    return g


def compact_membership(m: GridMeasure, j: int, cs, u_profile: UProfile | None = None) -> bool:
    """Membership test for the compact ``{nu : tail_mass(nu, k) <= g(k) for all k >= j}``.

    Integer levels ``k`` from ``j`` up to the outermost edge are checked;
    beyond the window the tail reduces to the overflow mass, tested at the
    last level.
    """
    z_max = max(abs(m.z_edges[0]), abs(m.z_edges[-1]))
    g = g_function(cs, u_profile, z_max=2 * z_max + 2)
    k_hi = max(j, int(np.ceil(z_max)))
    return all(tail_mass(m, k) <= g(k) for k in range(j, k_hi + 1))
