"""Rate functionals of the pair (slow path, occupation measure).

``S_T`` is the Freidlin-Wentzell type action with averaged coefficients,
``F_T`` the Donsker-Varadhan type functional of the occupation density, and
``L_T = S_T/2 + F_T/8``.  ``S_T`` is stored without the factor ``1/2``.

Conventions: ``0/0 = 0``; a nonzero numerator over a vanishing diffusion
gives ``+inf``.  All integrals are composite trapezoid; quadrature errors are
estimated by grid halving.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.special import ndtr

from .errors import BandwidthTooSmall
from .invariant import DensityTable, log_unnormalized
from .model import CoefficientSet
from .occupation import GridMeasure
from .paths import Path

DIFFUSION_FLOOR = 1e-10
SUPPORT_TOL = 1e-12


def _zero_numerator(num, scale):
    return np.abs(num) <= 1e-8 * (1.0 + scale)


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class TiltControl:
    """Drift perturbation ``v(t, z)`` of the fast process on a (t, z) grid.

    Outside ``z_grid`` the tilt is zero; in time it is interpolated linearly
    (constant beyond the ends).
    """

    t_grid: np.ndarray
    z_grid: np.ndarray
    v: np.ndarray
    support: tuple[float, float] | None = None

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.t_grid, dtype=float))
        z = np.asarray(self.z_grid, dtype=float)
        v = np.asarray(self.v, dtype=float).reshape(t.size, z.size)
        if not np.all(np.isfinite(v)):
            raise ValueError("tilt must be finite")
        support = self.support
        if support is None:
            nz = np.nonzero(np.any(np.abs(v) > SUPPORT_TOL, axis=0))[0]
            support = (float(z[nz[0]]), float(z[nz[-1]])) if nz.size else (0.0, 0.0)
        v = np.where((z >= support[0]) & (z <= support[1]), v, 0.0)
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "z_grid", z)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "support", (float(support[0]), float(support[1])))

    @classmethod
    def time_constant(cls, z_grid, values, T: float = 1.0) -> "TiltControl":
        values = np.asarray(values, dtype=float)
        return cls(np.array([0.0, T]), z_grid, np.vstack([values, values]))

    @classmethod
    def from_function(cls, f, t_grid, z_grid) -> "TiltControl":
        t, z = np.asarray(t_grid, float), np.asarray(z_grid, float)
        return cls(t, z, f(t[:, None], z[None, :]) * np.ones((t.size, z.size)))

    def row(self, t: float) -> np.ndarray:
        if self.t_grid.size == 1:
            return self.v[0]
        k = int(np.clip(np.searchsorted(self.t_grid, t, side="right") - 1, 0, self.t_grid.size - 2))
        t0, t1 = self.t_grid[k], self.t_grid[k + 1]
        w = float(np.clip((t - t0) / (t1 - t0), 0.0, 1.0))
        return (1.0 - w) * self.v[k] + w * self.v[k + 1]

    def __call__(self, t: float, z) -> np.ndarray:
        return np.interp(z, self.z_grid, self.row(t), left=0.0, right=0.0)

    def sup(self) -> float:
        return float(np.max(np.abs(self.v)))


@dataclass(frozen=True)
class SmoothDensity:
    """Density ``n(t, z)`` of an absolutely continuous measure with its z-derivative."""

    t_grid: np.ndarray
    z_grid: np.ndarray
    n: np.ndarray
    n_z: np.ndarray
    per_t_norm: np.ndarray = field(default=None)

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.t_grid, dtype=float))
        z = np.asarray(self.z_grid, dtype=float)
        n = np.asarray(self.n, dtype=float).reshape(t.size, z.size)
        n_z = np.asarray(self.n_z, dtype=float).reshape(t.size, z.size)
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "z_grid", z)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "n_z", n_z)
        object.__setattr__(self, "per_t_norm", trapezoid(n, z, axis=1))

    @classmethod
    def time_constant(cls, z_grid, n, n_z, T: float = 1.0) -> "SmoothDensity":
        n, n_z = np.asarray(n, float), np.asarray(n_z, float)
        return cls(np.array([0.0, T]), z_grid, np.vstack([n, n]), np.vstack([n_z, n_z]))

    @property
    def T(self) -> float:
        return float(self.t_grid[-1] - self.t_grid[0])

    def rows_at(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Rows of ``n`` and ``n_z`` linearly interpolated to times ``t``."""
        W = _interp_matrix(self.t_grid, np.atleast_1d(np.asarray(t, float)))
        return W @ self.n, W @ self.n_z

    def to_grid_measure(self, t_edges, z_edges) -> GridMeasure:
        """Discretize onto grid cells (time-cell averages of the z-cell masses)."""
        t_edges = np.asarray(t_edges, float)
        z_edges = np.asarray(z_edges, float)
        out = np.empty((t_edges.size - 1, z_edges.size + 1))
        for i in range(t_edges.size - 1):
            ts = np.linspace(t_edges[i], t_edges[i + 1], 5)
            rows, _ = self.rows_at(ts)
            row = trapezoid(rows, ts, axis=0) / (ts[-1] - ts[0])
            c = np.concatenate([[0.0], cumulative_trapezoid(row, self.z_grid)])
            c /= c[-1]
            ce = np.interp(z_edges, self.z_grid, c, left=0.0, right=1.0)
            probs = np.clip(np.concatenate([[ce[0]], np.diff(ce), [1.0 - ce[-1]]]), 0.0, None)
            out[i] = probs / probs.sum() * (t_edges[i + 1] - t_edges[i])
        return GridMeasure(t_edges, z_edges, out)


def _interp_matrix(grid, t):
    """Matrix ``W`` with ``W @ values(grid) = linear interpolation at t`` (clamped)."""
    W = np.zeros((t.size, grid.size))
    if grid.size == 1:
        W[:, 0] = 1.0
        return W
    k = np.clip(np.searchsorted(grid, t, side="right") - 1, 0, grid.size - 2)
    w = np.clip((t - grid[k]) / (grid[k + 1] - grid[k]), 0.0, 1.0)
    W[np.arange(t.size), k] = 1.0 - w
    W[np.arange(t.size), k + 1] += w
    return W


@dataclass(frozen=True)
class RateBreakdown:
    S_T: float
    F_T: float
    L_T: float
    quad_error: dict
    infinite_reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "S_T": self.S_T,
            "F_T": self.F_T,
            "L_T": self.L_T,
            "quad_error": dict(self.quad_error),
            "infinite_reason": self.infinite_reason,
        }


# ---------------------------------------------------------------------------
# averaged coefficients and the action S


def averaged_coeffs(cs: CoefficientSet, m, X: Path, beta: float = 0.0):
    """Kernel averages ``A_nu(t, X_t)`` and ``B^2_nu(t, X_t) + beta^2`` at the path nodes.

    ``m`` is a :class:`GridMeasure` (kernel of the time cell containing each
    node) or a :class:`SmoothDensity` (rows interpolated in time, quadrature
    in z).
    """
    t, x = X.t, X.X
    if isinstance(m, GridMeasure):
        K = m.kernel[m.cell_of(t)]
        zr = m.z_rep[None, :]
        A_nu = np.sum(K * cs.A(x[:, None], zr), axis=1)
        B2_nu = np.sum(K * cs.B(x[:, None], zr) ** 2, axis=1)
    elif isinstance(m, SmoothDensity):
        rows, _ = m.rows_at(t)
        rows = rows / trapezoid(rows, m.z_grid, axis=1)[:, None]
        zg = m.z_grid[None, :]
        A_nu = trapezoid(cs.A(x[:, None], zg) * rows, m.z_grid, axis=1)
        B2_nu = trapezoid(cs.B(x[:, None], zg) ** 2 * rows, m.z_grid, axis=1)
    else:
        raise TypeError(f"unsupported measure type {type(m).__name__}")
    return A_nu, B2_nu + beta * beta


def _action_integrand(X: Path, A_nu, B2):
    num = X.Xdot - A_nu
    zero_num = _zero_numerator(num, np.abs(X.Xdot) + np.abs(A_nu))
    degenerate = B2 <= DIFFUSION_FLOOR
    if np.any(degenerate & ~zero_num):
        return None
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(zero_num, 0.0, num * num / np.where(degenerate, 1.0, B2))
    return f


def _halving_error(f, t):
    if t.size < 5:
        return 0.0
    sl = slice(None, None, 2) if (t.size - 1) % 2 == 0 else slice(0, -1, 2)
    full = trapezoid(f, t)
    coarse = trapezoid(f[sl], t[sl])
    if sl.stop is not None:
        coarse += trapezoid(f[-2:], t[-2:])
    return abs(full - coarse)


def _action(X: Path, m, cs, beta):
    if abs(X.X[0] - cs.x0) > 1e-9 * (1.0 + abs(cs.x0)):
        return math.inf, "non-AC path: X_0 != x0", 0.0
    A_nu, B2 = averaged_coeffs(cs, m, X, beta)
    f = _action_integrand(X, A_nu, B2)
    if f is None:
        return math.inf, "degenerate diffusion", 0.0
    return float(trapezoid(f, X.t)), None, _halving_error(f, X.t)


def action_S(X: Path, m, cs: CoefficientSet, beta: float = 0.0) -> float:
    """``int_0^T (Xdot - A_nu)^2 / (B^2_nu + beta^2) dt`` (no factor 1/2)."""
    return _action(X, m, cs, beta)[0]


# ---------------------------------------------------------------------------
# densities, F and the tilt bijection


def is_absolutely_continuous(m: GridMeasure, threshold: float = 0.01):
    """Decide the non-AC branch of ``F`` for a grid measure.

    Interior cells carry uniform (absolutely continuous) mass; the two
    overflow cells are atoms on the outer edges.  A row is singular when its
    atoms hold more than ``threshold`` of its mass.  Returns
    ``(ok, worst_fraction)``.
    """
    K = m.kernel
    rows = m.mass.sum(axis=1) > 0
    if not np.any(rows):
        return False, 1.0
    atoms = K[rows][:, [0, -1]].max(axis=1)
    worst = float(atoms.max())
    return worst <= threshold, worst


def density_estimate(m: GridMeasure, bandwidth: float, dz: float | None = None, z_grid=None) -> SmoothDensity:
    """Gaussian smoothing of each time row into a positive density.

    Interior cells are smoothed as uniform-in-cell mass, overflow cells as
    point masses on their edge.  ``n_z`` is the exact derivative of the
    smoothed row.  The output has one node per time edge; interior nodes
    average the two neighbouring cells.

    Raises
    ------
    BandwidthTooSmall
        Some grid value of the smoothed density is not positive.
    """
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    e = m.z_edges
    if z_grid is None:
        step = dz or (float(np.min(np.diff(e))) if e.size > 1 else bandwidth / 5)
        lo, hi = e[0] - 4 * bandwidth, e[-1] + 4 * bandwidth
        z_grid = np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)
    z = np.asarray(z_grid, float)
    h = bandwidth
    lo, hi = e[:-1], e[1:]
    zz = z[:, None]
    w = (hi - lo)[None, :]
    phi = lambda x: np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)  # noqa: E731
    dens = np.concatenate([
        phi((zz - e[0]) / h) / h,
        (ndtr((zz - lo) / h) - ndtr((zz - hi) / h)) / w,
        phi((zz - e[-1]) / h) / h,
    ], axis=1)
    deriv = np.concatenate([
        -(zz - e[0]) / h**2 * phi((zz - e[0]) / h) / h,
        (phi((zz - lo) / h) - phi((zz - hi) / h)) / (h * w),
        -(zz - e[-1]) / h**2 * phi((zz - e[-1]) / h) / h,
    ], axis=1)
    K = m.kernel
    cell_n, cell_nz = K @ dens.T, K @ deriv.T
    nt = m.t_edges.size - 1
    idx_lo = np.clip(np.arange(nt + 1) - 1, 0, nt - 1)
    idx_hi = np.clip(np.arange(nt + 1), 0, nt - 1)
    n = 0.5 * (cell_n[idx_lo] + cell_n[idx_hi])
    n_z = 0.5 * (cell_nz[idx_lo] + cell_nz[idx_hi])
    if np.any(~(n > 0)):
        raise BandwidthTooSmall(f"smoothed density underflows at bandwidth {bandwidth:g}")
    norm = trapezoid(n, z, axis=1)[:, None]
    return SmoothDensity(m.t_edges, z, n / norm, n_z / norm)


def _score_gap(n: SmoothDensity, cs: CoefficientSet):
    """``n_z/n - p'/p`` with ``0/0 = 0``."""
    s = cs.score(n.z_grid)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(n.n > 0, n.n_z / n.n - s, 0.0)


def _t_window(n: SmoothDensity, t_range):
    if t_range is None:
        return n.t_grid, n.n, n.n_z
    t0, t1 = t_range
    inner = n.t_grid[(n.t_grid > t0) & (n.t_grid < t1)]
    t = np.concatenate([[t0], inner, [t1]])
    rows, rows_z = n.rows_at(t)
    return t, rows, rows_z


def dv_rate_F(n: SmoothDensity, p: DensityTable | None, cs: CoefficientSet, t_range=None,
              return_error: bool = False):
    """``int int sigma^2 (n_z/n - p'/p)^2 n dz dt`` over the grid (no factor 1/8).

    ``p`` is accepted for interface symmetry; the score ``p'/p`` is evaluated
    in closed form from ``cs``.
    """
    t, rows, rows_z = _t_window(n, t_range)
    s2 = cs.sigma2(n.z_grid)[None, :]
    s = cs.score(n.z_grid)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(rows > 0, s2 * (rows_z - s * rows) ** 2 / rows, 0.0)
    inner = trapezoid(f, n.z_grid, axis=1)
    total = float(trapezoid(inner, t)) if t.size > 1 else 0.0
    if not return_error:
        return total
    z = n.z_grid
    zs = slice(None, None, 2) if (z.size - 1) % 2 == 0 else slice(None)
    coarse_inner = trapezoid(f[:, zs], z[zs], axis=1)
    err = abs(total - float(trapezoid(coarse_inner, t))) + _halving_error(inner, t)
    return total, err


def v_from_density(n: SmoothDensity, p: DensityTable | None, cs: CoefficientSet) -> TiltControl:
    """Tilt ``v = (sigma^2/2)(n_z/n - p'/p)`` making ``n`` the frozen-time invariant law."""
    v = 0.5 * cs.sigma2(n.z_grid)[None, :] * _score_gap(n, cs)
    return TiltControl(n.t_grid, n.z_grid, v)


def density_from_v(v: TiltControl, p: DensityTable | None, cs: CoefficientSet) -> SmoothDensity:
    """Density ``n(t, z) ∝ p(z) exp(2 int_0^z v(t,y)/sigma^2(y) dy)``, normalized per time."""
    z = v.z_grid
    logn = log_unnormalized(cs, z, extra_drift=v.v)
    logn = logn - logn.max(axis=1, keepdims=True)
    n = np.exp(logn)
    n /= trapezoid(n, z, axis=1)[:, None]
    n_z = n * (cs.score(z)[None, :] + 2.0 * v.v / cs.sigma2(z)[None, :])
    return SmoothDensity(v.t_grid, z, n, n_z)


def D_operator(z, du, d2u, cs: CoefficientSet) -> np.ndarray:
    """``Du = b u' + (sigma^2/2)(u'' + (u')^2)`` on tabulated derivatives."""
    z = np.asarray(z, float)
    du, d2u = np.asarray(du, float), np.asarray(d2u, float)
    return cs.b(z) * du + 0.5 * cs.sigma2(z) * (d2u + du * du)


def rate_L(X: Path, m, cs: CoefficientSet, beta: float = 0.0, *, p: DensityTable | None = None,
           bandwidth: float = 0.1, dz: float | None = None, ac_threshold: float = 0.01) -> RateBreakdown:
    """``L_T = S_T/2 + F_T/8`` for a path and a measure.

    A :class:`GridMeasure` is first tested for absolute continuity, then
    smoothed by :func:`density_estimate`; a :class:`SmoothDensity` is used as
    is.
    """
    S, reason, s_err = _action(X, m, cs, beta)
    f_err = 0.0
    if isinstance(m, GridMeasure):
        ok, worst = is_absolutely_continuous(m, ac_threshold)
        if not ok:
            F = math.inf
            reason = reason or f"non-AC measure: atom with {worst:.3g} of a row's mass"
        else:
            try:
                n = density_estimate(m, bandwidth, dz)
            except BandwidthTooSmall:
                n = None
                F = math.inf
                reason = reason or "non-AC measure: density estimate refused"
            if n is not None:
                F, f_err = dv_rate_F(n, p, cs, return_error=True)
    else:
        F, f_err = dv_rate_F(m, p, cs, return_error=True)
    L = 0.5 * S + 0.125 * F
    return RateBreakdown(S, F, L, {"S": s_err, "F": f_err}, reason)


# ---------------------------------------------------------------------------
# Legendre dualities


@dataclass(frozen=True)
class LegendreSResult:
    numeric_sup: float
    closed_form: float
    gap: float
    bound: float
    quad_error: float
    lambda_step: float


def _cell_sups(dX, a, b, grid, chunk=64):
    out = np.empty(dX.size)
    for s in range(0, dX.size, chunk):
        d = (dX[s:s + chunk] - a[s:s + chunk])[:, None]
        vals = grid[None, :] * d - 0.5 * grid[None, :] ** 2 * b[s:s + chunk, None]
        out[s:s + chunk] = vals.max(axis=1)
    return out


def legendre_S_check(X: Path, m, cs: CoefficientSet, lambda_step: float = 1e-3, lambda_grid=None,
                     beta: float = 0.0) -> LegendreSResult:
    """Grid supremum over piecewise-constant ``lambda`` versus ``S_T/2``.

    The pieces are the path's time intervals.  On each piece the objective
    ``lambda dX - lambda int A_nu - lambda^2/2 int B^2_nu`` is maximized over
    ``lambda_grid`` (default: all multiples of ``lambda_step`` covering the
    piecewise vertices).  The reported ``bound`` is
    ``lambda_step^2 * max B^2_nu * T / 2 + quad_error``.
    """
    A_nu, B2 = averaged_coeffs(cs, m, X, beta)
    dt = np.diff(X.t)
    a = 0.5 * (A_nu[1:] + A_nu[:-1]) * dt
    b = 0.5 * (B2[1:] + B2[:-1]) * dt
    dX = np.diff(X.X)
    if np.any(b <= 0):
        raise ValueError("legendre_S_check needs a nondegenerate averaged diffusion")
    if lambda_grid is None:
        vert = (dX - a) / b
        lo = math.floor(vert.min() / lambda_step) - 2
        hi = math.ceil(vert.max() / lambda_step) + 2
        lambda_grid = np.arange(lo, hi + 1) * lambda_step
    grid = np.asarray(lambda_grid, float)
    numeric = float(np.sum(_cell_sups(dX, a, b, grid)))
    f = _action_integrand(X, A_nu, B2)
    closed = 0.5 * float(trapezoid(f, X.t))
    # discretization error: trapezoid halving plus coarse-partition exact sups
    quad = 0.5 * _halving_error(f, X.t)
    if X.t.size >= 5:
        sl = slice(None, None, 2) if (X.t.size - 1) % 2 == 0 else slice(0, -1, 2)
        tc, Xc = X.t[sl], X.X[sl]
        Ac, Bc = A_nu[sl], B2[sl]
        dtc = np.diff(tc)
        ac = 0.5 * (Ac[1:] + Ac[:-1]) * dtc
        bc = 0.5 * (Bc[1:] + Bc[:-1]) * dtc
        exact_fine = float(np.sum(0.5 * (dX - a) ** 2 / b))
        exact_coarse = float(np.sum(0.5 * (np.diff(Xc) - ac) ** 2 / bc))
        quad += abs(exact_fine - exact_coarse) + abs(exact_fine - closed)
    bound = lambda_step**2 * float(B2.max()) * X.T / 2.0 + quad
    return LegendreSResult(numeric, closed, abs(numeric - closed), bound, quad, lambda_step)


@dataclass(frozen=True)
class LegendreFResult:
    alpha: np.ndarray
    J: np.ndarray
    J_min: float
    alpha_min: float
    F: float
    vertex_gap: float
    root_residual: float

    @property
    def vertex_relative_gap(self) -> float:
        return self.vertex_gap / abs(self.F) if self.F else self.vertex_gap


def _d_dz(f, z):
    """Fourth-order centred differences along the last axis (second order at the ends)."""
    h = z[1] - z[0]
    out = np.gradient(f, z, axis=-1, edge_order=2)
    if f.shape[-1] >= 5:
        out[..., 2:-2] = (f[..., :-4] - 8 * f[..., 1:-3] + 8 * f[..., 3:-1] - f[..., 4:]) / (12 * h)
    return out


def legendre_F_check(n: SmoothDensity, p: DensityTable | None, cs: CoefficientSet, alpha_grid=None) -> LegendreFResult:
    """Evaluate ``J(alpha) = int int D u_alpha dnu`` along ``u_alpha' = alpha d``.

    ``d = n_z/n - p'/p``.  ``J`` is computed through the operator ``D``
    itself (with ``u''`` from differences of ``d``), not through the
    quadratic closed form, so the comparison with ``-F/8`` at the vertex is
    a genuine check of the duality.
    """
    if alpha_grid is None:
        alpha_grid = np.linspace(-0.5, 1.5, 201)
    alpha = np.asarray(alpha_grid, float)
    z = n.z_grid
    d = _score_gap(n, cs)
    dd = _d_dz(d, z)
    J = np.empty_like(alpha)
    for i, a in enumerate(alpha):
        Du = D_operator(z[None, :], a * d, a * dd, cs)
        inner = trapezoid(Du * n.n, z, axis=1)
        J[i] = trapezoid(inner, n.t_grid) if n.t_grid.size > 1 else 0.0
    F = dv_rate_F(n, p, cs)
    k = int(np.argmin(J))
    inner1 = trapezoid(D_operator(z[None, :], d, dd, cs) * n.n, z, axis=1)
    J1 = float(trapezoid(inner1, n.t_grid))
    return LegendreFResult(alpha, J, float(J[k]), float(alpha[k]), F, abs(J[k] + F / 8.0), abs(J1))


# ---------------------------------------------------------------------------
# approximation of tilts


def _bump(radius_nodes: int) -> np.ndarray:
    if radius_nodes < 1:
        return np.ones(1)
    r = np.arange(-radius_nodes, radius_nodes + 1) / radius_nodes
    w = np.zeros_like(r)
    inside = np.abs(r) < 1
    w[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return w / w.sum()


def smooth_tilt(v: TiltControl, k: float, width: float, t_width: float = 0.0) -> TiltControl:
    """Truncate ``v`` to ``|z| < k`` and mollify with a compact bump kernel.

    ``width`` is the z radius of the bump, ``t_width`` its time radius (zero
    disables time smoothing).  A radius of at most one grid step is the
    identity.
    """
    z = v.z_grid
    vt = np.where(np.abs(z)[None, :] < k, v.v, 0.0)
    dz = z[1] - z[0] if z.size > 1 else 1.0
    kz = _bump(int(math.floor(width / dz + 1e-9)))
    if kz.size > 1:
        vt = np.apply_along_axis(lambda r: np.convolve(r, kz, mode="same"), 1, vt)
    if t_width > 0 and v.t_grid.size > 2:
        dt = v.t_grid[1] - v.t_grid[0]
        kt = _bump(int(math.floor(t_width / dt + 1e-9)))
        if kt.size > 1:
            ones = np.convolve(np.ones(v.t_grid.size), kt, mode="same")
            vt = np.apply_along_axis(lambda c: np.convolve(c, kt, mode="same"), 0, vt) / ones[:, None]
    lo = max(z[0], -k - width)
    hi = min(z[-1], k + width)
    support = (lo, hi) if hi >= lo else (0.0, 0.0)
    return TiltControl(v.t_grid, z, vt, support)
