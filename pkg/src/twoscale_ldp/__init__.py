"""Large deviations for diffusions with a fast ergodic component.

Numerical tools for the pair ``(X^eps, nu^eps)`` of a slow diffusion and the
occupation measure of a fast one: coefficient families, invariant density
and averaging, Euler-Maruyama simulation with Girsanov tilts, grid
occupation measures and metrics, the rate functionals and their dual
forms, contracted variational problems, and Monte Carlo estimation of ball
probabilities.
"""
from .errors import (
    BadParam, BandwidthTooSmall, DegenerateDiffusion, Infeasible, LDPError, NotDegenerate,
    NumericalFailure, UnknownFamily, Unstable, WindowTooSmall, ZeroHits,
)
from .invariant import DensityTable, averaged_drift, averaged_ode, invariant_density, nu_p
from .model import AssumptionReport, CoefficientSet, register_family, validate_assumptions
from .occupation import (
    GridMeasure, cdf, composite_metric, compact_membership, lp_distance, occupation_measure, tail_mass,
    uniform_distance,
)
from .paths import Path
from .rare_event import Estimate, SlopeFit, crude_ball_probability, ergodic_check, is_ball_probability, ldp_slope
from .rate import (
    D_operator, RateBreakdown, SmoothDensity, TiltControl, action_S, averaged_coeffs, density_estimate,
    density_from_v, dv_rate_F, legendre_F_check, legendre_S_check, rate_L, smooth_tilt, v_from_density,
)
from .simulate import LogWeight, PathPair, simulate_pair, simulate_regularized, simulate_tilted
from .variational import VariationalResult, contracted_action, gartner_rate, hxy

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
