import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from twoscale_ldp import WindowTooSmall, averaged_drift, averaged_ode, invariant_density, nu_p, register_family
from twoscale_ldp.model import CoefficientSet

from oracles import std_normal


def test_ou_density_is_standard_normal(ou_p):
    assert np.max(np.abs(ou_p.values - std_normal(ou_p.z))) <= 1e-6
    assert np.allclose(ou_p.score, -ou_p.z, atol=1e-12)


def test_normalization_within_norm_error(ou_p):
    assert abs(trapezoid(ou_p.values, ou_p.z) - 1.0) <= ou_p.norm_error + 1e-15
    assert np.all(ou_p.values >= 0)


def test_score_identity_every_family():
    for fam in ("ou_linear", "double_well_fast", "bounded_smooth"):
        cs = register_family(fam)
        p = invariant_density(cs, (-8, 8), 1e-2)
        s = cs.sigma(p.z)
        expect = (2 * cs.b(p.z) - 2 * s * cs.sigma_prime(p.z)) / s**2
        assert np.max(np.abs(p.score - expect)) <= 1e-12


def test_symmetric_family_gives_even_density():
    p = invariant_density(register_family("bounded_smooth"), (-10, 10), 1e-3)
    assert np.max(np.abs(p.values - p.values[::-1])) <= 1e-12


def test_double_well_oracle():
    cs = register_family("double_well_fast")
    p = invariant_density(cs, (-5, 5), 1e-3)
    ref = np.exp(p.z**2 / 2 - p.z**4 / 4) / 2
    ref /= trapezoid(ref, p.z)
    # cumulative trapezoid of the exponent is second order in the step
    assert np.max(np.abs(p.values - ref)) <= 1e-6
    right = p.z > 0
    assert abs(p.z[right][np.argmax(p.values[right])] - 1.0) <= 1e-3
    assert abs(p.z[~right][np.argmax(p.values[~right])] + 1.0) <= 1e-3


def test_window_too_small(ou):
    with pytest.raises(WindowTooSmall):
        invariant_density(ou, (-3, 3), 1e-3)


def test_window_doubling_stable(ou):
    p1 = invariant_density(ou, (-7, 7), 1e-3)
    p2 = invariant_density(ou, (-14, 14), 1e-3)
    assert np.max(np.abs(p1.values - p2(p1.z))) <= 2 * max(p1.norm_error, p2.norm_error) + 1e-12


def test_averaged_drift_ou(ou, ou_p):
    Abar = averaged_drift(ou, ou_p)
    x = np.linspace(-2, 2, 9)
    assert np.allclose(Abar(x), -x, atol=1e-6)


def _with_A(cs, A):
    return CoefficientSet(cs.family_id, cs.params, A, cs.B, cs.b, cs.sigma, cs.sigma_prime)


def test_averaged_drift_constant_and_second_moment(ou, ou_p):
    const = averaged_drift(_with_A(ou, lambda x, z: 0 * np.asarray(x) * np.asarray(z) + 3.0), ou_p)
    assert const(0.7) == pytest.approx(3.0, abs=1e-12)
    second = averaged_drift(_with_A(ou, lambda x, z: np.asarray(z) ** 2 + 0 * np.asarray(x)), ou_p)
    assert second(0.0) == pytest.approx(1.0, abs=1e-6)


def test_lattice_interpolation_close(ou, ou_p):
    exact = averaged_drift(ou, ou_p)
    lat = averaged_drift(ou, ou_p, lattice=np.linspace(-3, 3, 61))
    x = np.linspace(-2.95, 2.95, 37)
    assert np.max(np.abs(exact(x) - lat(x))) <= 1e-9


def test_averaged_ode_linear(ou, ou_p):
    X = averaged_ode(ou.with_initial(x0=1.0), ou_p, 1.0, 1e-3)
    assert X.X[-1] == pytest.approx(math.exp(-1), abs=1e-8)


def test_averaged_ode_constant_drifts(ou, ou_p):
    X = averaged_ode(ou.with_initial(x0=0.3), ou_p, 1.0, 0.01, drift=lambda x: 0.0 * x)
    assert np.all(X.X == 0.3)
    X = averaged_ode(ou.with_initial(x0=0.3), ou_p, 1.0, 0.01, drift=lambda x: 1.0 + 0.0 * x)
    assert np.allclose(X.X, 0.3 + X.t, atol=1e-14)


def test_nu_p_rows(ou_p):
    m = nu_p(ou_p, 1.0, 1, np.linspace(-3, 3, 13))
    assert m.mass.sum() == pytest.approx(1.0, abs=1e-12)
    half = nu_p(ou_p, 1.0, 1, np.array([0.0]))
    assert half.mass[0, 0] == pytest.approx(0.5, abs=1e-6)
    two = nu_p(ou_p, 1.0, 2, np.linspace(-3, 3, 13))
    assert np.array_equal(two.mass[0], two.mass[1])
    assert np.allclose(two.mass.sum(axis=1), 0.5, atol=1e-12)
