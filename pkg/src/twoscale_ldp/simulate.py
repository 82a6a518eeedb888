"""Euler-Maruyama integration of the slow/fast pair, plain, tilted or regularized.

The slow component takes one step of size ``dt`` per node; the fast one is
advanced on ``substeps`` equal substeps chosen so that
``dt/substeps <= 0.1 eps / L_b``.  Every replica draws its Gaussian
increments from its own counter-based generator keyed by
``(seed, replica, stream)``, so results do not depend on batching or on the
number of worker threads.

Under a tilt the log-likelihood ratio of the original law against the
simulated one is accumulated step by step.  For Euler transitions the
per-step ratio is exactly ``-psi sqrt(dt) N / sqrt(eps) - psi^2 dt / (2 eps)``
(and its fast analogue), so the discrete weights are unbiased.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import BadParam, DegenerateDiffusion, Unstable
from .model import CoefficientSet, lipschitz_b
from .paths import Path, time_grid
from .rate import DIFFUSION_FLOOR, TiltControl, averaged_coeffs, density_from_v

STREAM_W, STREAM_V, STREAM_W_PRIME = 0, 1, 2
GATE = 0.1
BLOWUP_FACTOR = 10.0
DEFAULT_WINDOW = (-5.0, 5.0)
_CHUNK_FLOATS = 4_000_000


def generator(seed: int, replica: int, stream: int) -> np.random.Generator:
    """Independent Philox generator for one (seed, replica, stream) triple."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replica), int(stream)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class PathPair:
    t_grid: np.ndarray
    X: np.ndarray
    xi: np.ndarray
    eps: float
    seed: int
    substeps: int

    @property
    def path(self) -> Path:
        return Path(self.t_grid, self.X)


@dataclass(frozen=True)
class LogWeight:
    m_eps_term: float
    qv_eps_term: float
    m_term: float
    qv_term: float
    log_w: float

    def to_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in ("m_eps_term", "qv_eps_term", "m_term", "qv_term", "log_w")}


@dataclass(frozen=True)
class Batch:
    """Replicas stacked along the first axis.  Weight arrays are ``None`` when untilted."""

    t_grid: np.ndarray
    X: np.ndarray
    xi: np.ndarray
    eps: float
    seed: int
    substeps: int
    m_eps_term: np.ndarray | None = None
    qv_eps_term: np.ndarray | None = None
    m_term: np.ndarray | None = None
    qv_term: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def log_w(self) -> np.ndarray | None:
        if self.m_term is None:
            return None
        return self.m_eps_term - self.qv_eps_term + self.m_term - self.qv_term

    def pair(self, r: int) -> PathPair:
        return PathPair(self.t_grid, self.X[r], self.xi[r], self.eps, self.seed, self.substeps)

    def weight(self, r: int) -> LogWeight:
        if self.m_term is None:
            return LogWeight(0.0, 0.0, 0.0, 0.0, 0.0)
        parts = [float(a[r]) for a in (self.m_eps_term, self.qv_eps_term, self.m_term, self.qv_term)]
        return LogWeight(*parts, parts[0] - parts[1] + parts[2] - parts[3])


def required_substeps(dt: float, eps: float, L_b: float) -> int:
    """Smallest substep count meeting ``dt/substeps <= 0.1 eps / L_b``."""
    x = dt * L_b / (GATE * eps)
    return max(1, math.ceil(x * (1.0 - 1e-12)))


def _tilt_lipschitz(tilt: TiltControl) -> float:
    if tilt.z_grid.size < 2:
        return 0.0
    return float(np.max(np.abs(np.diff(tilt.v, axis=1)) / np.diff(tilt.z_grid)[None, :]))


@dataclass(frozen=True)
class _Tilting:
    tilt: TiltControl
    psi: np.ndarray


def _prepare_tilt(cs, tilt, target, t, beta, measure):
    Xt, Xdot = target.at(t)
    tp = Path(t, Xt, Xdot)
    nu = measure if measure is not None else density_from_v(tilt, None, cs)
    A_nu, B2 = averaged_coeffs(cs, nu, tp, beta)
    num = Xdot - A_nu
    zero = np.abs(num) <= 1e-8 * (1.0 + np.abs(Xdot) + np.abs(A_nu))
    degenerate = B2 <= DIFFUSION_FLOOR
    if np.any(degenerate & ~zero):
        k = int(np.argmax(degenerate & ~zero))
        raise DegenerateDiffusion(
            f"averaged diffusion B^2_nu = {B2[k]:.3g} vanishes at t = {t[k]:.4g} while the target "
            "moves off the averaged drift; add a regularizing noise (beta > 0)"
        )
    psi = np.where(degenerate | zero, 0.0, num / np.sqrt(np.where(degenerate, 1.0, B2)))
    return _Tilting(tilt, psi)


def _draw(seed, replicas, stream, size):
    return np.stack([generator(seed, r, stream).standard_normal(size) for r in replicas])


def _run_chunk(cs, eps, t, sub, seed, replicas, streams, beta, tilting, limit):
    r = len(replicas)
    N = t.size - 1
    sw, sv, swp = streams
    nW = _draw(seed, replicas, sw, N)
    nV = _draw(seed, replicas, sv, N * sub)
    nWp = _draw(seed, replicas, swp, N) if beta != 0.0 else None
    X = np.empty((r, N + 1))
    xi = np.empty((r, N + 1))
    X[:, 0], xi[:, 0] = cs.x0, cs.z0
    se = math.sqrt(eps)
    if tilting is not None:
        acc = np.zeros((4, r))
    x, z = X[:, 0].copy(), xi[:, 0].copy()
    for k in range(N):
        dt = t[k + 1] - t[k]
        h = dt / sub
        sdt, sh = math.sqrt(dt), math.sqrt(h)
        Bx = cs.B(x, z)
        drift = cs.A(x, z)
        if nWp is None:
            Bt, noise = Bx, nW[:, k]
        else:
            Bt = np.sqrt(Bx * Bx + beta * beta)
            noise = (Bx * nW[:, k] + beta * nWp[:, k]) / Bt
        if tilting is not None:
            psi = tilting.psi[k]
            drift = drift + psi * Bt
            acc[2] -= psi * sdt * noise / se
            acc[3] += psi * psi * dt / (2.0 * eps)
        x_new = x + drift * dt + se * sdt * Bt * noise
        for j in range(sub):
            s = t[k] + j * h
            g = nV[:, k * sub + j]
            sig = cs.sigma(z)
            bz = cs.b(z)
            if tilting is not None:
                v = tilting.tilt(s, z)
                bz = bz + v
                acc[0] -= v / sig * sh * g / se
                acc[1] += v * v / (sig * sig) * h / (2.0 * eps)
            z = z + bz * h / eps + sig * sh / se * g
        x = x_new
        if not np.all(np.abs(z) <= limit):
            raise Unstable(
                f"fast component left |z| <= {limit:g} at t = {t[k + 1]:.4g}; "
                "reduce dt or check the instance"
            )
        X[:, k + 1], xi[:, k + 1] = x, z
    return X, xi, (acc if tilting is not None else None)


def simulate_batch(cs: CoefficientSet, eps: float, T: float, dt: float, seed: int, n: int, *,
                   tilt: TiltControl | None = None, target: Path | None = None, beta: float = 0.0,
                   measure=None, z_window=DEFAULT_WINDOW, substeps: int | None = None,
                   workers: int = 1, stream_ids=(STREAM_W, STREAM_V, STREAM_W_PRIME),
                   first_replica: int = 0) -> Batch:
    """Simulate replicas ``first_replica .. first_replica + n - 1``.

    With ``tilt`` and ``target`` the tilted system is simulated: fast drift
    ``b + v``, slow drift ``A + psi B`` with
    ``psi = (Xdot - A_nu)/B_nu`` along the target (``B`` replaced by
    ``sqrt(B^2 + beta^2)`` when ``beta != 0``).  ``nu`` is ``measure`` if
    given, else the density reconstructed from the tilt.

    Raises
    ------
    Unstable
        The fast component exceeded ten times the window.
    DegenerateDiffusion
        Tilting with ``B^2_nu`` below the floor where the target is off the
        averaged drift.
    """
    if not (dt > 0 and eps > 0 and T > 0):
        raise BadParam("dt, eps and T must be positive")
    if n < 1:
        raise BadParam("n must be >= 1")
    if (tilt is None) != (target is None):
        raise BadParam("tilt and target must be given together")
    t = time_grid(T, dt)
    dt_eff = float(np.max(np.diff(t)))
    L_b = lipschitz_b(cs, z_window)
    if tilt is not None:
        L_b += _tilt_lipschitz(tilt)
    need = required_substeps(dt_eff, eps, L_b)
    if substeps is None:
        substeps = need
    elif substeps < need:
        raise BadParam(f"substeps={substeps} violates the stability gate (need >= {need})")
    tilting = _prepare_tilt(cs, tilt, target, t, beta, measure) if tilt is not None else None
    limit = BLOWUP_FACTOR * max(abs(z_window[0]), abs(z_window[1]))
    per = max(1, _CHUNK_FLOATS // ((t.size - 1) * (substeps + 2)))
    ids = list(range(first_replica, first_replica + n))
    chunks = [ids[i:i + per] for i in range(0, n, per)]

    def work(reps):
        return _run_chunk(cs, eps, t, substeps, seed, reps, stream_ids, float(beta), tilting, limit)

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(c) for c in chunks]
    X = np.concatenate([r[0] for r in results])
    xi = np.concatenate([r[1] for r in results])
    weights = [None] * 4
    if tilting is not None:
        acc = np.concatenate([r[2] for r in results], axis=1)
        weights = list(acc)
    return Batch(t, X, xi, float(eps), int(seed), int(substeps), *weights)


def simulate_pair(cs: CoefficientSet, eps: float, T: float, dt: float, seed: int, **kw) -> PathPair:
    """One replica of the untilted system (replica index 0 unless ``first_replica`` is given)."""
    return simulate_batch(cs, eps, T, dt, seed, 1, **kw).pair(0)


def simulate_tilted(cs: CoefficientSet, tilt: TiltControl, target: Path, eps: float, T: float, dt: float,
                    seed: int, **kw) -> tuple[PathPair, LogWeight]:
    """One replica of the tilted system together with its log-weight."""
    b = simulate_batch(cs, eps, T, dt, seed, 1, tilt=tilt, target=target, **kw)
    return b.pair(0), b.weight(0)


def simulate_regularized(cs: CoefficientSet, beta: float, eps: float, T: float, dt: float, seed: int,
                         **kw) -> PathPair:
    """Untilted system with the extra slow noise ``sqrt(eps) beta dW'``."""
    if beta == 0:
        raise BadParam("beta must be nonzero; use simulate_pair for the unregularized system")
    return simulate_batch(cs, eps, T, dt, seed, 1, beta=beta, **kw).pair(0)
