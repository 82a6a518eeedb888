import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twoscale_ldp import BadParam, UnknownFamily, register_family, validate_assumptions
from twoscale_ldp.model import FAMILIES, CoefficientSet, check_sigma


def test_ou_testbed_coefficients(ou):
    z = np.linspace(-3, 3, 7)
    assert np.allclose(ou.b(z), -z)
    assert np.allclose(ou.sigma(z), math.sqrt(2))
    assert np.allclose(ou.A(0.5, z), z - 0.5)
    assert np.allclose(ou.B(0.5, z), 1.0)


def test_zero_sigma_rejected():
    with pytest.raises(BadParam):
        register_family("ou_linear", {"s": 0.0})


@pytest.mark.parametrize("params", [{"nope": 1.0}, {"kappa": math.inf}, {"kappa": -1.0}])
def test_bad_params(params):
    with pytest.raises(BadParam):
        register_family("ou_linear", params)


def test_unknown_family():
    with pytest.raises(UnknownFamily):
        register_family("no_such_family")


def test_double_well_drift():
    cs = register_family("double_well_fast")
    z = np.linspace(-2, 2, 9)
    assert np.allclose(cs.b(z), z - z**3)


def test_validate_ou_all_pass(ou):
    rep = validate_assumptions(ou, (-5, 5), (-6, 6), 0.01)
    assert rep.passed, rep.verdicts
    assert set(rep.verdicts) == {"A1", "A2", "A3"}
    assert rep.sigma_bounds == pytest.approx((math.sqrt(2), math.sqrt(2)))
    assert rep.lipschitz_A_in_x == pytest.approx(1.0)


def _replace(cs, **kw):
    fields = dict(family_id=cs.family_id, params=cs.params, A=cs.A, B=cs.B, b=cs.b, sigma=cs.sigma,
                  sigma_prime=cs.sigma_prime)
    fields.update(kw)
    return CoefficientSet(**fields)


def test_expanding_drift_fails_confinement(ou):
    bad = _replace(ou, b=lambda z: np.asarray(z, float))
    rep = validate_assumptions(bad)
    assert not rep.verdicts["A3"]["pass"]
    assert rep.verdicts["A1"]["pass"] and rep.verdicts["A2"]["pass"]


def test_unbounded_B_fails_sup_condition(ou):
    bad = _replace(ou, B=lambda x, z: np.broadcast_to(np.asarray(z, float), np.broadcast_shapes(np.shape(x), np.shape(z))))
    rep = validate_assumptions(bad, z_window=(-20, 20))
    assert not rep.verdicts["A1"]["pass"]


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_builtin_families_pass_defaults(family):
    assert validate_assumptions(register_family(family)).passed


def test_report_is_reproducible(ou):
    assert validate_assumptions(ou).to_dict() == validate_assumptions(ou).to_dict()


@settings(max_examples=25, deadline=None)
@given(s=st.floats(0.2, 3.0), eta=st.floats(-0.9, 2.0))
def test_sigma_prime_matches_differences(s, eta):
    cs = register_family("bounded_smooth", {"s": s, "eta": eta})
    z = np.linspace(-5, 5, 1001)
    h = 1e-5
    fd = (cs.sigma(z + h) - cs.sigma(z - h)) / (2 * h)
    assert np.all(np.abs(cs.sigma_prime(z) - fd) <= 1e-6 * (1 + np.abs(cs.sigma_prime(z))))
    assert check_sigma(cs) <= 1e-6
