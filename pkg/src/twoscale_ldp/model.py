"""Problem instances for the slow/fast diffusion pair.

The slow component obeys ``dX = A(X, xi) dt + sqrt(eps) B(X, xi) dW`` and the
fast one ``dxi = b(xi)/eps dt + sigma(xi)/sqrt(eps) dV``.  Instances are drawn
from a closed registry of parametric families so that every coefficient,
including ``sigma'``, is available in closed form.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import BadParam, UnknownFamily

Coef2 = Callable[[np.ndarray, np.ndarray], np.ndarray]
Coef1 = Callable[[np.ndarray], np.ndarray]

DERIVATIVE_RTOL = 1e-6


@dataclass(frozen=True)
class CoefficientSet:
    family_id: str
    params: Mapping[str, float]
    A: Coef2
    B: Coef2
    b: Coef1
    sigma: Coef1
    sigma_prime: Coef1
    x0: float = 0.0
    z0: float = 0.0

    def sigma2(self, z):
        s = self.sigma(z)
        return s * s

    def score(self, z):
        """``p'(z)/p(z)`` of the invariant density, ``(2b - 2 sigma sigma') / sigma^2``."""
        z = np.asarray(z, dtype=float)
        s = self.sigma(z)
        return (2.0 * self.b(z) - 2.0 * s * self.sigma_prime(z)) / (s * s)

    def with_initial(self, x0: float | None = None, z0: float | None = None) -> "CoefficientSet":
        return CoefficientSet(
            self.family_id, self.params, self.A, self.B, self.b, self.sigma, self.sigma_prime,
            self.x0 if x0 is None else float(x0), self.z0 if z0 is None else float(z0),
        )


def _bcast(value, *arrays):
    shape = np.broadcast_shapes(*(np.shape(a) for a in arrays))
    return np.broadcast_to(np.asarray(value, dtype=float), shape)


# ---------------------------------------------------------------------------
# family registry


def _ou_linear(p):
    kappa, s = p["kappa"], p["s"]
    a1, a2, a3, b1, b2 = p["a1"], p["a2"], p["a3"], p["b1"], p["b2"]

    def A(x, z):
        return a1 * np.asarray(z, float) + a2 * np.asarray(x, float) + a3

    def B(x, z):
        x = np.asarray(x, float)
        return _bcast(b1 + b2 * np.tanh(x), x, z)

    return dict(
        A=A,
        B=B,
        b=lambda z: -kappa * np.asarray(z, float),
        sigma=lambda z: _bcast(s, z),
        sigma_prime=lambda z: _bcast(0.0, z),
    )


def _double_well_fast(p):
    s = p["s"]
    a1, a2, a3, b1 = p["a1"], p["a2"], p["a3"], p["b1"]

    def A(x, z):
        return a1 * np.asarray(z, float) + a2 * np.asarray(x, float) + a3

    def B(x, z):
        return _bcast(b1, x, z)

    def b(z):
        z = np.asarray(z, float)
        return z - z**3

    return dict(A=A, B=B, b=b, sigma=lambda z: _bcast(s, z), sigma_prime=lambda z: _bcast(0.0, z))


def _bounded_smooth(p):
    kappa, s, eta = p["kappa"], p["s"], p["eta"]
    a1, a2, a3, b1, b2 = p["a1"], p["a2"], p["a3"], p["b1"], p["b2"]

    def A(x, z):
        return a1 * np.tanh(np.asarray(z, float)) + a2 * np.sin(np.asarray(x, float)) + a3

    def B(x, z):
        x, z = np.asarray(x, float), np.asarray(z, float)
        return b1 + b2 * np.cos(x) / (1.0 + z * z)

    def sigma(z):
        z = np.asarray(z, float)
        return s * (1.0 + eta * np.exp(-0.5 * z * z))

    def sigma_prime(z):
        z = np.asarray(z, float)
        return -s * eta * z * np.exp(-0.5 * z * z)

    return dict(A=A, B=B, b=lambda z: -kappa * np.asarray(z, float), sigma=sigma, sigma_prime=sigma_prime)


@dataclass(frozen=True)
class Family:
    build: Callable[[Mapping[str, float]], dict]
    defaults: Mapping[str, float]
    positive: tuple[str, ...] = ()
    checks: tuple[tuple[str, Callable[[Mapping[str, float]], bool]], ...] = field(default_factory=tuple)
    doc: str = ""


FAMILIES: dict[str, Family] = {
    "ou_linear": Family(
        _ou_linear,
        dict(kappa=1.0, s=math.sqrt(2.0), a1=1.0, a2=-1.0, a3=0.0, b1=1.0, b2=0.0),
        positive=("kappa", "s"),
        doc="b=-kappa z, sigma=s, A=a1 z + a2 x + a3, B=b1 + b2 tanh(x)",
    ),
    "double_well_fast": Family(
        _double_well_fast,
        dict(s=math.sqrt(2.0), a1=1.0, a2=-1.0, a3=0.0, b1=1.0),
        positive=("s",),
        doc="b=z - z^3, sigma=s, A=a1 z + a2 x + a3, B=b1",
    ),
    "bounded_smooth": Family(
        _bounded_smooth,
        dict(kappa=1.0, s=1.0, eta=0.5, a1=1.0, a2=-0.5, a3=0.0, b1=1.0, b2=0.3),
        positive=("kappa", "s"),
        checks=(("eta > -1", lambda p: p["eta"] > -1.0),),
        doc="b=-kappa z, sigma=s(1+eta exp(-z^2/2)), A=a1 tanh z + a2 sin x + a3, "
        "B=b1 + b2 cos(x)/(1+z^2)",
    ),
}


def register_family(
    family_id: str,
    params: Mapping[str, float] | None = None,
    x0: float = 0.0,
    z0: float = 0.0,
    check_window: tuple[float, float] = (-5.0, 5.0),
) -> CoefficientSet:
    """Build a :class:`CoefficientSet` from a named family.

    Parameters not given take the family defaults.  The closed-form
    ``sigma_prime`` is checked against central differences on
    ``check_window`` before the instance is returned.

    Raises
    ------
    UnknownFamily
        ``family_id`` is not registered.
    BadParam
        Unknown parameter name, non-finite value, or a value outside the
        family's admissible range (e.g. ``s <= 0``).
    """
    try:
        fam = FAMILIES[family_id]
    except KeyError:
        raise UnknownFamily(f"unknown family {family_id!r}; known: {sorted(FAMILIES)}") from None
    merged = dict(fam.defaults)
    for key, value in (params or {}).items():
        if key not in fam.defaults:
            raise BadParam(f"family {family_id!r} has no parameter {key!r}")
        merged[key] = float(value)
    for key, value in merged.items():
        if not math.isfinite(value):
            raise BadParam(f"parameter {key!r} must be finite")
    for key in fam.positive:
        if merged[key] <= 0:
            raise BadParam(f"parameter {key!r} must be positive, got {merged[key]}")
    for label, ok in fam.checks:
        if not ok(merged):
            raise BadParam(f"family {family_id!r} requires {label}")
    if not (math.isfinite(x0) and math.isfinite(z0)):
        raise BadParam("initial point must be finite")
    cs = CoefficientSet(family_id, dict(merged), x0=float(x0), z0=float(z0), **fam.build(merged))
    check_sigma(cs, check_window)
    return cs


def check_sigma(cs: CoefficientSet, window=(-5.0, 5.0), step: float = 0.01, h: float = 1e-5) -> float:
    """Positivity of ``sigma`` and agreement of ``sigma_prime`` with central differences.

    Returns the largest scaled derivative discrepancy; raises ``BadParam`` when
    it exceeds ``DERIVATIVE_RTOL`` or ``sigma`` is not positive.
    """
    z = np.arange(window[0], window[1] + 0.5 * step, step)
    sig = cs.sigma(z)
    if np.any(~np.isfinite(sig)) or np.any(sig <= 0):
        raise BadParam("sigma must be positive on the window")
    fd = (cs.sigma(z + h) - cs.sigma(z - h)) / (2 * h)
    d = cs.sigma_prime(z)
    err = float(np.max(np.abs(d - fd) / (1.0 + np.abs(d))))
    if err > DERIVATIVE_RTOL:
        raise BadParam(f"sigma_prime disagrees with sigma (scaled error {err:.2e})")
    return err


# ---------------------------------------------------------------------------
# standing assumptions


@dataclass(frozen=True)
class AssumptionReport:
    lipschitz_A_in_x: float
    lipschitz_B_in_x: float
    lipschitz_b: float
    sup_A0_B0: float
    sigma_bounds: tuple[float, float]
    confinement_profile: dict
    verdicts: dict

    @property
    def passed(self) -> bool:
        return all(v["pass"] for v in self.verdicts.values())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sigma_bounds"] = list(self.sigma_bounds)
        return d


def _grid(window, step):
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo:
        raise ValueError(f"empty window {window}")
    n = max(2, int(round((hi - lo) / step)) + 1)
    return np.linspace(lo, hi, n)


def lipschitz_b(cs: CoefficientSet, z_window=(-5.0, 5.0), step: float = 0.01) -> float:
    """Largest finite-difference quotient of ``b`` on the window."""
    z = _grid(z_window, step)
    return float(np.max(np.abs(np.diff(cs.b(z))) / np.diff(z)))


def _tail_profile(cs, z_window, tail_fraction, checkpoints):
    lo, hi = z_window
    out = {}
    for side, edge in (("right", hi), ("left", lo)):
        if (side == "right" and edge <= 0) or (side == "left" and edge >= 0):
            out[side] = None
            continue
        start = edge * (1.0 - tail_fraction)
        z = np.linspace(start, edge, checkpoints)
        out[side] = {"z": z.tolist(), "b_sign_z": (cs.b(z) * np.sign(z)).tolist()}
    return out


def validate_assumptions(
    cs: CoefficientSet,
    z_window=(-5.0, 5.0),
    x_window=(-6.0, 6.0),
    grid_step: float = 0.01,
    *,
    tail_fraction: float = 0.1,
    tail_checkpoints: int = 5,
    sup_bound: float = 10.0,
    sigma_floor: float = 1e-8,
) -> AssumptionReport:
    """Numerical surrogate checks of the three standing assumptions.

    * coefficient regularity: Lipschitz quotients of ``A`` and ``B`` in ``x``
      (reported) and ``sup_z |A(0,z)| + |B(0,z)| <= sup_bound`` on the window;
    * fast diffusion: ``min sigma > sigma_floor`` on the window;
    * confinement: ``b(z) sign z`` strictly decreasing over ``tail_checkpoints``
      equally spaced points in the outer ``tail_fraction`` of each half-window,
      and negative at the outermost one.

    Failures are verdicts, never exceptions.
    """
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    if tail_checkpoints < 3:
        raise ValueError("need at least 3 tail checkpoints")
    z = _grid(z_window, grid_step)
    x = _grid(x_window, grid_step)
    Xg, Zg = np.meshgrid(x, z, indexing="ij")
    dx = np.diff(x)[:, None]
    with np.errstate(invalid="ignore", over="ignore"):
        LA = float(np.max(np.abs(np.diff(cs.A(Xg, Zg), axis=0)) / dx))
        LB = float(np.max(np.abs(np.diff(cs.B(Xg, Zg), axis=0)) / dx))
        sup0 = float(np.max(np.abs(cs.A(0.0, z)) + np.abs(cs.B(0.0, z))))
    sig = cs.sigma(z)
    smin, smax = float(np.min(sig)), float(np.max(sig))
    Lb = lipschitz_b(cs, z_window, grid_step)

    a1_ok = np.isfinite(LA) and np.isfinite(LB) and np.isfinite(sup0) and sup0 <= sup_bound
    a2_ok = np.isfinite(smin) and np.isfinite(smax) and smin > sigma_floor

    profile = _tail_profile(cs, z_window, tail_fraction, tail_checkpoints)
    a3_ok = True
    a3_margin = math.inf
    sides = [s for s in profile.values() if s is not None]
    if not sides:
        a3_ok, a3_margin = False, -math.inf
    for side in sides:
        vals = np.asarray(side["b_sign_z"])
        drops = -np.diff(vals)
        a3_margin = min(a3_margin, float(np.min(drops)), float(-vals[-1]))
        if np.any(drops <= 0) or vals[-1] >= 0:
            a3_ok = False

    verdicts = {
        "A1": {
            "pass": bool(a1_ok),
            "margin": sup_bound - sup0,
            "detail": f"Lipschitz(A)={LA:.4g}, Lipschitz(B)={LB:.4g}, sup|A(0,z)|+|B(0,z)|={sup0:.4g} "
            f"(bound {sup_bound:g})",
        },
        "A2": {
            "pass": bool(a2_ok),
            "margin": smin - sigma_floor,
            "detail": f"sigma in [{smin:.4g}, {smax:.4g}]",
        },
        "A3": {
            "pass": bool(a3_ok),
            "margin": a3_margin,
            "detail": "b(z) sign z strictly decreasing and negative over the window tail"
            if a3_ok
            else "tail profile of b(z) sign z not strictly decreasing to negative values",
        },
    }
    return AssumptionReport(LA, LB, Lb, sup0, (smin, smax), profile, verdicts)
