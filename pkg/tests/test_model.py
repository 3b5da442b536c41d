"""Model catalog: classification, parameters, duality."""

import math

import pytest
from scipy.special import ndtr

from levysup.model import (
    BROWNIAN,
    CAUCHY,
    CPP,
    SN_STABLE,
    STABLE,
    Regularity,
    UnsupportedModelError,
    classify_model,
    dual_model,
)


@pytest.mark.parametrize("drift", [-1.0, -0.3, 0.0, 0.5, 2.0])
def test_brownian_rho_is_positive_probability(drift):
    m = classify_model(BROWNIAN, drift=drift)
    assert m.family == BROWNIAN
    assert m.alpha == 2.0
    assert m.rho == pytest.approx(ndtr(drift), rel=1e-15)
    assert m.regularity is Regularity.TYPE1
    assert m.ladder_drift == 0.0 and m.ladder_drift_star == 0.0


def test_brownian_killing_rate_negative_drift_only():
    assert classify_model(BROWNIAN, drift=0.5).killing_rate == 0.0
    m = classify_model(BROWNIAN, drift=-0.5)
    # rate killing the ascending ladder: 2|c| / (sqrt(c^2+2) - c)
    assert m.killing_rate == pytest.approx(
        -2.0 * m.drift / (math.sqrt(m.drift**2 + 2.0) - m.drift), rel=1e-14)


def test_cauchy_fixed_parameters():
    m = classify_model(CAUCHY)
    assert (m.alpha, m.rho) == (1.0, 0.5)
    assert m.regularity is Regularity.TYPE1


@pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
def test_spectrally_negative_maps_to_stable(alpha):
    m = classify_model(SN_STABLE, alpha=alpha)
    assert m.family == STABLE
    assert m.rho == pytest.approx(1.0 / alpha, rel=1e-15)
    assert m.spectral == "negative"


def test_stable_spectral_classification():
    m = classify_model(STABLE, alpha=1.5, rho=1.0 / 1.5)
    assert m.spectral == "negative"
    m = classify_model(STABLE, alpha=1.5, rho=1.0 - 1.0 / 1.5)
    assert m.spectral == "positive"
    m = classify_model(STABLE, alpha=1.5, rho=0.55)
    assert m.spectral == "none"


def test_stable_alpha_two_is_gaussian():
    m = classify_model(STABLE, alpha=2.0, rho=0.5)
    assert m.rho == 0.5
    with pytest.raises(ValueError):
        classify_model(STABLE, alpha=2.0, rho=0.6)


def test_stable_alpha_one_symmetric_becomes_cauchy():
    m = classify_model(STABLE, alpha=1.0, rho=0.5)
    assert m.family == CAUCHY


@pytest.mark.parametrize(
    "kwargs",
    [
        {"alpha": 2.5, "rho": 0.5},
        {"alpha": 0.0, "rho": 0.5},
        {"alpha": 1.5, "rho": 0.9},  # outside [1 - 1/alpha, 1/alpha]
        {"alpha": 1.5, "rho": 0.0},
        {"alpha": 1.0, "rho": 0.7},  # asymmetric alpha=1 not strictly stable
    ],
)
def test_stable_parameter_validation(kwargs):
    with pytest.raises(ValueError):
        classify_model(STABLE, **kwargs)


def test_sn_stable_alpha_range():
    for bad in (1.0, 2.0, 0.5):
        with pytest.raises(ValueError):
            classify_model(SN_STABLE, alpha=bad)


def test_cpp_requires_opposite_signs():
    with pytest.raises(ValueError):
        classify_model(CPP, rate=1.0, jump_scale=1.0, jump_sign=1, drift=0.5)
    with pytest.raises(ValueError):
        classify_model(CPP, rate=1.0, jump_scale=1.0, jump_sign=-1, drift=-0.5)
    with pytest.raises(ValueError):
        classify_model(CPP, rate=1.0, jump_scale=1.0, jump_sign=2, drift=-0.5)
    with pytest.raises(ValueError):
        classify_model(CPP, rate=1.0, jump_scale=1.0, jump_sign=1)  # zero drift


def test_cpp_type3_positive_jumps():
    m = classify_model(CPP, rate=1.0, jump_scale=1.0, jump_sign=1, drift=-1.0)
    assert m.regularity is Regularity.TYPE3
    # irregular upward: ascending ladder has a time atom, d* = 1/gamma > 0
    assert m.ladder_drift == 0.0
    assert m.ladder_drift_star > 0.0
    assert m.killing_rate == 0.0  # mean drift + rate*scale = 0, oscillates


def test_cpp_negative_mean_kills_ascending_ladder():
    m = classify_model(CPP, rate=1.0, jump_scale=1.0, jump_sign=1, drift=-2.0)
    assert m.killing_rate > 0.0  # drifts to -inf, all-time maximum finite


def test_cpp_type2_negative_jumps():
    m = classify_model(CPP, rate=1.0, jump_scale=1.0, jump_sign=-1, drift=1.0)
    assert m.regularity is Regularity.TYPE2
    assert m.ladder_drift > 0.0
    assert m.ladder_drift_star == 0.0
    assert m.killing_rate == 0.0  # mean 0, oscillates


def test_cpp_mirror_symmetry_of_ladder_atoms():
    up = classify_model(CPP, rate=2.0, jump_scale=0.5, jump_sign=1, drift=-1.5)
    down = classify_model(CPP, rate=2.0, jump_scale=0.5, jump_sign=-1, drift=1.5)
    # -X swaps the roles of the two ladder processes exactly
    assert down.ladder_drift == pytest.approx(up.ladder_drift_star, rel=1e-12)


@pytest.mark.parametrize(
    "family,kwargs",
    [
        (BROWNIAN, {"drift": 0.7}),
        (CAUCHY, {}),
        (STABLE, {"alpha": 1.5, "rho": 0.6}),
        (CPP, {"rate": 1.0, "jump_scale": 1.0, "jump_sign": 1, "drift": -1.0}),
    ],
)
def test_dual_is_an_involution(family, kwargs):
    m = classify_model(family, **kwargs)
    d = dual_model(m)
    dd = dual_model(d)
    assert dd.family == m.family
    assert dd.drift == pytest.approx(m.drift, abs=1e-15)
    if m.rho is not None and d.rho is not None:
        assert d.rho == pytest.approx(1.0 - m.rho, rel=1e-12)


def test_dual_brownian_flips_drift():
    m = classify_model(BROWNIAN, drift=0.4)
    assert dual_model(m).drift == -0.4


def test_dual_cpp_flips_jumps_and_drift():
    m = classify_model(CPP, rate=1.0, jump_scale=1.0, jump_sign=1, drift=-1.0)
    d = dual_model(m)
    assert d.jump_sign == -1
    assert d.drift == 1.0
    assert d.regularity is Regularity.TYPE2


def test_unknown_family_rejected():
    with pytest.raises(ValueError):
        classify_model("Gamma")


def test_unsupported_model_error_is_value_error():
    # callers catch one exception type for both validation styles
    assert issubclass(UnsupportedModelError, Exception)
