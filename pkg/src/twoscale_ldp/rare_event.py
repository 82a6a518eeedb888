"""Monte Carlo estimation of ball probabilities and ergodic diagnostics.

The ball around a target ``(X, m)`` is ``{r_T(X^eps, X) + rho(nu^eps, m) <= delta}``
with ``r_T`` the uniform distance and ``rho`` the CDF metric of
:mod:`twoscale_ldp.occupation`.  When no target measure is given only the
path part is used.  ``event="escape"`` selects the complement-type event
``{r_T(X^eps, X) >= delta}``.

Replicas are simulated in fixed blocks with per-replica random streams, so
every estimate is a deterministic function of its inputs and seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParam, ZeroHits
from .invariant import averaged_ode, invariant_density, nu_p
from .model import CoefficientSet
from .occupation import GridMeasure, lp_distance, lp_within, occupation_batch
from .paths import Path
from .rate import SmoothDensity, TiltControl, density_estimate, smooth_tilt, v_from_density
from .simulate import DEFAULT_WINDOW, simulate_batch

BLOCK = 10_000
EVENTS = ("ball", "escape", "all")


@dataclass(frozen=True)
class Estimate:
    p_hat: float
    log_p: float
    stderr: float
    n: int
    method: str
    eps: float
    delta: float
    hits: int = 0
    note: str | None = None

    def to_dict(self) -> dict:
        return {"eps": self.eps, "delta": self.delta, "n": self.n, "p_hat": self.p_hat,
                "stderr": self.stderr, "log_p": self.log_p, "method": self.method,
                "hits": self.hits, "note": self.note}

    def ci95(self) -> tuple[float, float]:
        return self.p_hat - 1.96 * self.stderr, self.p_hat + 1.96 * self.stderr


@dataclass(frozen=True)
class SlopeFit:
    eps_list: np.ndarray
    log_p: np.ndarray
    slope: float
    intercept: float
    rate_ref: float
    scaled: np.ndarray = field(default=None)

    @property
    def deviation(self) -> float:
        """``|slope + rate_ref| / rate_ref``."""
        return abs(self.slope + self.rate_ref) / abs(self.rate_ref) if self.rate_ref else abs(self.slope)

    @property
    def monotone_trend(self) -> bool:
        """``eps log p`` approaches ``-rate_ref`` monotonically as eps decreases."""
        gaps = np.abs(self.scaled + self.rate_ref)
        return bool(np.all(np.diff(gaps) <= 0))

    def to_dict(self) -> dict:
        return {"eps_list": self.eps_list.tolist(), "log_p": self.log_p.tolist(),
                "eps_log_p": self.scaled.tolist(), "slope": self.slope, "intercept": self.intercept,
                "rate_ref": self.rate_ref, "deviation": self.deviation,
                "monotone_trend": self.monotone_trend}


def _target_on(t, X: Path):
    return np.interp(t, X.t, X.X)


def _indicator(batch, X: Path, m: GridMeasure | None, delta: float, event: str) -> np.ndarray:
    if event == "all":
        return np.ones(batch.n, dtype=bool)
    r = np.max(np.abs(batch.X - _target_on(batch.t_grid, X)[None, :]), axis=1)
    if event == "escape":
        return r >= delta
    hit = r <= delta
    if m is not None and np.any(hit):
        idx = np.nonzero(hit)[0]
        meas = occupation_batch(batch.t_grid, batch.xi[idx], m.t_edges, m.z_edges)
        for j, mm in zip(idx, meas):
            hit[j] = lp_within(mm, m, delta - r[j])
    return hit


def _check(n, delta, event, X, T):
    if n < 1:
        raise BadParam("n must be >= 1")
    if event not in EVENTS:
        raise BadParam(f"event must be one of {EVENTS}")
    if delta < 0:
        raise BadParam("delta must be nonnegative")
    if X.T < T - 1e-12:
        raise BadParam("target path shorter than the horizon")


def crude_ball_probability(cs: CoefficientSet, eps: float, target_X: Path, target_m: GridMeasure | None,
                           delta: float, n: int, seed: int, *, T: float | None = None, dt: float = 0.01,
                           event: str = "ball", workers: int = 1, z_window=DEFAULT_WINDOW) -> Estimate:
    """Fraction of untilted replicas in the event, with binomial standard error."""
    T = target_X.T if T is None else T
    _check(n, delta, event, target_X, T)
    hits = 0
    for start in range(0, n, BLOCK):
        k = min(BLOCK, n - start)
        b = simulate_batch(cs, eps, T, dt, seed, k, workers=workers, first_replica=start, z_window=z_window)
        hits += int(np.sum(_indicator(b, target_X, target_m, delta, event)))
    p = hits / n
    note = None
    if hits == 0:
        note = f"zero hits; one-sided 95% upper bound {3.0 / n:.3g}"
    return Estimate(p, math.log(p) if p > 0 else -math.inf, math.sqrt(p * (1 - p) / n), n, "crude",
                    float(eps), float(delta), hits, note)


def tilt_for_target(cs: CoefficientSet, target_m, bandwidth: float = 0.2, k: float | None = None,
                    width: float = 0.0) -> TiltControl:
    """Tilt whose frozen-time invariant laws reproduce the (smoothed) target measure.

    The tilt is truncated to ``|z| <= k`` (default: the outermost grid edge)
    and optionally mollified, which keeps it bounded and Lipschitz.
    """
    n = target_m if isinstance(target_m, SmoothDensity) else density_estimate(target_m, bandwidth)
    v = v_from_density(n, None, cs)
    if k is None:
        k = float(np.max(np.abs(target_m.z_edges))) if isinstance(target_m, GridMeasure) else float(
            np.max(np.abs(n.z_grid)))
    return smooth_tilt(v, k, width)


def is_ball_probability(cs: CoefficientSet, eps: float, target_X: Path, target_m: GridMeasure | None,
                        delta: float, n: int, seed: int, *, tilt: TiltControl | None = None,
                        bandwidth: float = 0.2, beta: float = 0.0, T: float | None = None, dt: float = 0.01,
                        event: str = "ball", workers: int = 1, z_window=DEFAULT_WINDOW,
                        return_weights: bool = False):
    """Importance-sampling estimate ``mean(w 1{event})`` under the tilted dynamics.

    Without an explicit ``tilt`` it is built from ``target_m`` by
    :func:`tilt_for_target`.  The slow drift is tilted towards
    ``target_X``.  ``beta`` adds the regularizing slow noise (it changes
    the law being estimated).

    Raises
    ------
    DegenerateDiffusion
        Passed through from the simulator when ``B^2_nu`` vanishes along the
        target and ``beta = 0``.
    """
    T = target_X.T if T is None else T
    _check(n, delta, event, target_X, T)
    if tilt is None:
        if target_m is None:
            raise BadParam("a tilt or a target measure is required")
        tilt = tilt_for_target(cs, target_m, bandwidth)
    vals = np.empty(n)
    hit_count = 0
    weights = np.empty(n)
    for start in range(0, n, BLOCK):
        k = min(BLOCK, n - start)
        b = simulate_batch(cs, eps, T, dt, seed, k, tilt=tilt, target=target_X, beta=beta, workers=workers,
                           first_replica=start, z_window=z_window)
        ind = _indicator(b, target_X, target_m, delta, event)
        w = np.exp(b.log_w)
        weights[start:start + k] = w
        vals[start:start + k] = np.where(ind, w, 0.0)
        hit_count += int(ind.sum())
    p = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    note = "zero hits" if hit_count == 0 else None
    est = Estimate(p, math.log(p) if p > 0 else -math.inf, se, n, "tilted", float(eps), float(delta),
                   hit_count, note)
    return (est, weights) if return_weights else est


def ldp_slope(estimates, rate_ref: float) -> SlopeFit:
    """Fit ``eps log p_hat`` by a constant and compare with ``-rate_ref``.

    ``intercept`` is the coefficient ``c1`` of the auxiliary affine fit
    ``eps log p = c0 + c1 eps`` (a log-prefactor estimate, diagnostic only).

    Raises
    ------
    ZeroHits
        Some estimate has ``p_hat = 0``.
    """
    est = list(estimates)
    if len(est) < 3:
        raise BadParam("at least three eps values are required")
    eps = np.array([e.eps for e in est], float)
    if not np.all(np.diff(eps) < 0):
        raise BadParam("eps values must be strictly decreasing")
    if any(e.p_hat <= 0 for e in est):
        raise ZeroHits("an estimate has zero hits; refine n or widen delta instead of extrapolating")
    logp = np.array([math.log(e.p_hat) for e in est])
    scaled = eps * logp
    c1 = float(np.polyfit(eps, scaled, 1)[0])
    return SlopeFit(eps, logp, float(np.mean(scaled)), c1, float(rate_ref), scaled)


def _strictly_decreasing(a) -> bool:
    return bool(np.all(np.diff(np.asarray(a)) < 0))


def ergodic_check(cs: CoefficientSet, eps_list, T: float, n: int, seed: int, *, dt: float = 0.01,
                  t_cells: int = 10, z_edges=None, workers: int = 1, z_window=DEFAULT_WINDOW) -> dict:
    """Median distances of the slow path to the averaged flow and of the occupation measure to ``p dt``.

    The verdict requires both medians to decrease strictly along
    ``eps_list``; a single eps passes trivially.
    """
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise BadParam("eps_list must be strictly decreasing")
    z_edges = np.linspace(-3.0, 3.0, 13) if z_edges is None else np.asarray(z_edges, float)
    p = invariant_density(cs)
    Xbar = averaged_ode(cs, p, T, dt, method="euler")
    target_m = nu_p(p, T, t_cells, z_edges)
    rows = []
    for eps in eps_list:
        b = simulate_batch(cs, eps, T, dt, seed, n, workers=workers, z_window=z_window)
        r = np.max(np.abs(b.X - _target_on(b.t_grid, Xbar)[None, :]), axis=1)
        meas = occupation_batch(b.t_grid, b.xi, target_m.t_edges, target_m.z_edges)
        rho = np.array([lp_distance(m, target_m) for m in meas])
        rows.append({"eps": eps, "median_r": float(np.median(r)), "median_rho": float(np.median(rho)),
                     "substeps": b.substeps})
    med_r = [row["median_r"] for row in rows]
    med_rho = [row["median_rho"] for row in rows]
    note = "single eps: monotonicity is vacuous" if len(rows) == 1 else None
    verdict = _strictly_decreasing(med_r) and _strictly_decreasing(med_rho)
    return {"T": T, "n": n, "seed": seed, "rows": rows, "verdict": bool(verdict), "note": note}
