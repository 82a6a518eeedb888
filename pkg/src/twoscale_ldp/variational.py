"""Contracted variational problems.

``gartner_rate`` is the occupation rate of a time-independent density,
``hxy`` the constrained minimum

    H(y, x) = inf { int sigma^2 (m'/m - p'/p)^2 m dz : int A(x, z) m dz = y },

and ``contracted_action`` the action ``(1/8) int H(Xdot_t, X_t) dt`` of a
slow path when ``B = 0``.

``hxy`` searches over densities ``m_v`` generated by a drift tilt ``v``
(piecewise linear on knots), for which the objective is
``int 4 v^2 / sigma^2 m_v``.  The constraint is handled by an augmented
Lagrangian; the inner problems use L-BFGS-B with a central-difference
gradient on the knot values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import minimize

from .errors import Infeasible, NotDegenerate
from .invariant import DensityTable, log_unnormalized
from .model import CoefficientSet
from .paths import Path
from .rate import TiltControl


def gartner_rate(z, m, p: DensityTable | None, cs: CoefficientSet) -> float:
    """``(1/8) int sigma^2 (m'/m - p'/p)^2 m dz`` with ``m'`` by central differences."""
    z = np.asarray(z, float)
    m = np.asarray(m, float)
    dm = np.gradient(m, z, edge_order=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(m > 0, cs.sigma2(z) * (dm - cs.score(z) * m) ** 2 / m, 0.0)
    return 0.125 * float(trapezoid(f, z))


@dataclass(frozen=True)
class VariationalOptions:
    knots: int = 17
    z_step: float = 0.01
    z_window: tuple[float, float] | None = None
    tol: float = 1e-6
    max_outer: int = 30
    max_inner: int = 200
    mu0: float = 10.0
    mu_growth: float = 10.0
    mu_max: float = 1e8
    fd_step: float = 1e-6
    ftol: float = 1e-12
    gtol: float = 1e-5


@dataclass(frozen=True)
class VariationalResult:
    value: float
    argmin_tilt: TiltControl | None
    constraint_residual: float
    iterations: int
    converged: bool

    def to_dict(self) -> dict:
        return {"H": self.value, "residual": self.constraint_residual, "converged": self.converged,
                "iterations": self.iterations}


class _TiltProblem:
    def __init__(self, y, x, cs, window, opt: VariationalOptions):
        lo, hi = window
        self.z = np.linspace(lo, hi, int(round((hi - lo) / opt.z_step)) + 1)
        self.knots = np.linspace(lo, hi, opt.knots)
        self.cs, self.y = cs, y
        self.s2 = cs.sigma2(self.z)
        self.a = np.asarray(cs.A(np.full_like(self.z, x), self.z), float)

    def v(self, c):
        return np.interp(self.z, self.knots, c)

    def density(self, c):
        v = self.v(c)
        logm = log_unnormalized(self.cs, self.z, extra_drift=v)
        m = np.exp(logm - logm.max())
        return v, m / trapezoid(m, self.z)

    def evaluate(self, c):
        v, m = self.density(c)
        G = float(trapezoid(4.0 * v * v / self.s2 * m, self.z))
        r = float(trapezoid(self.a * m, self.z)) - self.y
        return G, r


def _window(p: DensityTable, opt: VariationalOptions):
    if opt.z_window is not None:
        return opt.z_window
    return float(p.z[0]), float(p.z[-1])


def hxy(y: float, x: float, cs: CoefficientSet, p: DensityTable, opt: VariationalOptions | None = None,
        v0=None) -> VariationalResult:
    """Minimize the occupation rate under the drift constraint ``int A(x, .) m = y``.

    ``v0`` optionally warm-starts the knot values.  The returned value is
    the unnormalized ``H`` (no factor 1/8).

    Raises
    ------
    Infeasible
        ``y`` lies outside the range of ``A(x, .)`` on the window.
    """
    opt = opt or VariationalOptions()
    window = _window(p, opt)
    prob = _TiltProblem(float(y), float(x), cs, window, opt)
    a_lo, a_hi = float(prob.a.min()), float(prob.a.max())
    if not (a_lo - opt.tol <= y <= a_hi + opt.tol):
        raise Infeasible(f"y = {y:g} outside the range [{a_lo:g}, {a_hi:g}] of A(x, .) on the window")
    c = np.zeros(opt.knots) if v0 is None else np.asarray(v0, float).copy()
    G, r = prob.evaluate(c)
    if v0 is None and abs(r) <= opt.tol:
        return VariationalResult(0.0, _tilt(prob, c), abs(r), 0, True)

    lam, mu = 0.0, opt.mu0
    h = opt.fd_step
    iterations = 0

    def lagrangian(c):
        G, r = prob.evaluate(c)
        return G + lam * r + 0.5 * mu * r * r

    def grad(c):
        g = np.empty_like(c)
        for i in range(c.size):
            e = np.zeros_like(c)
            e[i] = h
            g[i] = (lagrangian(c + e) - lagrangian(c - e)) / (2 * h)
        return g

    converged = False
    for _ in range(opt.max_outer):
        res = minimize(lagrangian, c, jac=grad, method="L-BFGS-B",
                       options={"maxiter": opt.max_inner, "ftol": opt.ftol, "gtol": opt.gtol})
        c = res.x
        iterations += int(res.nit)
        G, r = prob.evaluate(c)
        if abs(r) <= opt.tol:
            converged = True
            break
        lam += mu * r
        mu = min(mu * opt.mu_growth, opt.mu_max)
    return VariationalResult(G, _tilt(prob, c), abs(r), iterations, converged)


def _tilt(prob: _TiltProblem, c) -> TiltControl:
    return TiltControl.time_constant(prob.z, prob.v(c))


def _b_vanishes(cs: CoefficientSet, X: Path, z) -> bool:
    xs = np.linspace(X.X.min(), X.X.max(), 21)
    return bool(np.all(cs.B(xs[:, None], z[None, :]) == 0.0))


def contracted_action(X: Path, cs: CoefficientSet, p: DensityTable, opt: VariationalOptions | None = None) -> float:
    """``(1/8) int_0^T H(Xdot_t, X_t) dt`` for an instance with ``B = 0``.

    Each node warm-starts from the previous optimal tilt; an infeasible
    node makes the action infinite.

    Raises
    ------
    NotDegenerate
        ``B`` does not vanish identically.
    """
    opt = opt or VariationalOptions()
    lo, hi = _window(p, opt)
    if not _b_vanishes(cs, X, np.linspace(lo, hi, 201)):
        raise NotDegenerate("contracted_action requires B = 0; use rate_L with an explicit measure")
    if abs(X.X[0] - cs.x0) > 1e-9 * (1.0 + abs(cs.x0)):
        return math.inf
    H = np.empty(X.t.size)
    knots = np.linspace(lo, hi, opt.knots)
    warm = None
    for k, (y, x) in enumerate(zip(X.Xdot, X.X)):
        try:
            res = hxy(float(y), float(x), cs, p, opt, v0=warm)
        except Infeasible:
            return math.inf
        H[k] = res.value
        warm = np.interp(knots, res.argmin_tilt.z_grid, res.argmin_tilt.v[0])
    return 0.125 * float(trapezoid(H, X.t))
