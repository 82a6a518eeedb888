import math

import numpy as np
import pytest

from twoscale_ldp import (
    Infeasible, NotDegenerate, Path, SmoothDensity, averaged_drift, averaged_ode, contracted_action, dv_rate_F,
    gartner_rate, hxy, invariant_density, register_family,
)

from oracles import mixture_oracle, std_normal

Z = np.linspace(-8, 8, 3201)


@pytest.fixture(scope="module")
def pz(ou_z):
    return invariant_density(ou_z, (-8, 8), 1e-3)


def test_gartner_zero_at_p(ou_z, pz):
    assert gartner_rate(pz.z, pz.values, pz, ou_z) <= 1e-8


def test_gartner_shifted_normal(ou_z, pz):
    assert gartner_rate(Z, std_normal(Z, 1.0), pz, ou_z) == pytest.approx(0.25, rel=1e-2)


def test_gartner_linear_in_sigma2(pz):
    base = register_family("ou_linear")
    scaled = register_family("ou_linear", {"s": math.sqrt(2 * 2.5), "kappa": 2.5})
    m = std_normal(Z, 0.6)
    assert gartner_rate(Z, m, pz, scaled) == pytest.approx(2.5 * gartner_rate(Z, m, pz, base), rel=1e-12)


def test_gartner_matches_rate_module(ou_z, pz):
    m = 0.3 * std_normal(Z, -1.0) + 0.7 * std_normal(Z, 0.8)
    n = SmoothDensity.time_constant(Z, m, np.gradient(m, Z, edge_order=2), T=1.0)
    assert gartner_rate(Z, m, pz, ou_z) == pytest.approx(dv_rate_F(n, pz, ou_z) / 8, rel=1e-8)


# -- H(y, x) -----------------------------------------------------------------------


def test_hxy_at_average_is_zero(ou, ou_z):
    p = invariant_density(ou, (-8, 8), 1e-3)
    y = averaged_drift(ou, p)(0.4)
    r = hxy(y, 0.4, ou, p)
    assert r.value == 0.0 and r.converged and r.iterations == 0


def test_hxy_gaussian_shift_bound_and_oracle(ou_z, pz):
    r = hxy(1.0, 0.0, ou_z, pz)
    assert r.converged and r.constraint_residual <= 1e-6
    assert r.value <= 2.0 * (1 + 1e-3)
    oracle = mixture_oracle(1.0, ou_z)
    assert r.value == pytest.approx(oracle, rel=0.05)
    # the optimal tilt is the constant Gaussian shift v = y sigma^2 / 2 = 1 where p has mass
    v = r.argmin_tilt
    core = np.abs(v.z_grid) <= 2
    assert np.allclose(v.v[0, core], 1.0, atol=0.05)


def test_hxy_infeasible():
    cs = register_family("bounded_smooth", {"a2": 0.0, "a3": 0.0})
    p = invariant_density(cs, (-10, 10), 1e-2)
    with pytest.raises(Infeasible):
        hxy(2.0, 0.0, cs, p)


def test_hxy_nonnegative_and_midpoint_convex(ou_z, pz):
    H = {y: hxy(y, 0.0, ou_z, pz).value for y in (-1.0, 0.0, 1.0)}
    assert all(h >= 0 for h in H.values())
    assert H[0.0] == 0.0
    assert H[0.0] <= 0.5 * (H[-1.0] + H[1.0]) + 1e-6
    assert H[1.0] == pytest.approx(H[-1.0], rel=1e-4)


def test_hxy_positive_off_average(ou_z, pz):
    assert hxy(0.3, 0.0, ou_z, pz).value > 0.1


# -- contracted action -------------------------------------------------------------


def test_contracted_action_averaged_flow(pz):
    cs = register_family("ou_linear", {"b1": 0.0})
    X = averaged_ode(cs.with_initial(x0=0.5), pz, 1.0, 0.1)
    assert contracted_action(X, cs.with_initial(x0=0.5), pz) <= 1e-10


def test_contracted_action_linear_path(ou_z, pz):
    y = 0.5
    t = np.linspace(0, 1, 6)
    X = Path(t, y * t, np.full_like(t, y))
    S = contracted_action(X, ou_z, pz)
    assert S <= (2 * y**2 / 8) * (1 + 1e-3)
    assert S == pytest.approx(2 * y**2 / 8, rel=0.05)


def test_contracted_action_wrong_start(ou_z, pz):
    t = np.linspace(0, 1, 6)
    assert contracted_action(Path(t, 1 + t, np.ones_like(t)), ou_z, pz) == math.inf


def test_contracted_action_requires_degenerate(ou, pz):
    t = np.linspace(0, 1, 6)
    with pytest.raises(NotDegenerate):
        contracted_action(Path(t, t, np.ones_like(t)), ou, pz)


def test_contracted_action_infeasible_node():
    cs = register_family("bounded_smooth", {"a2": 0.0, "a3": 0.0, "b1": 0.0, "b2": 0.0})
    p = invariant_density(cs, (-10, 10), 1e-2)
    t = np.linspace(0, 1, 3)
    assert contracted_action(Path(t, 2 * t, np.full_like(t, 2.0)), cs, p) == math.inf
