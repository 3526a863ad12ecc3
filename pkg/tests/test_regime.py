import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmelab import ConfigurationError, ProblemParams, RegimeError, classify, flux_exponent


def params(**kw):
    base = dict(a=1.0, b=1.0, c=1.0, k=1.0, m=2.5, p=2.0, q=1.6)
    base.update(kw)
    return ProblemParams(**base)


def test_blowup_3d_example():
    v = classify(params(), 3)
    assert v.blowup_bound_3d and not v.blowup_bound_2d and not v.global_existence
    assert v.violated_conditions == ()
    assert flux_exponent(params(), v) == pytest.approx(0.125)


def test_global_example():
    p = params(m=1.5, p=2.0, q=3.0)
    v = classify(p, 3)
    assert v.global_existence and not v.blowup_bound_3d
    assert flux_exponent(p, v) == pytest.approx(1.5)


def test_m_outside_interval():
    v = classify(params(m=3.0), 3)
    assert v.not_covered
    assert "m in (2, 8/(5-p))" in v.violated_conditions


def test_large_p_branch():
    p = params(m=2.5, p=6.0, q=2.0)
    v = classify(p, 3)
    assert v.blowup_bound_3d
    assert flux_exponent(p, v) == pytest.approx(2.5 * 5.0 / 4.0 - 0.5)


def test_dimension_2_gets_2d_flag():
    v = classify(params(), 2)
    assert v.blowup_bound_2d and not v.blowup_bound_3d


def test_strict_boundary_q_flips_with_single_violation():
    v = classify(params(q=1.5), 3)
    assert v.not_covered
    assert v.violated_conditions == ("q > 3/2",)


def test_integer_beta():
    p = params(m=4.0, p=4.0, q=2.0)
    v = classify(p, 3)
    assert v.blowup_bound_3d
    assert flux_exponent(p, v) == pytest.approx(1.0)


def test_zero_coefficient_reported():
    p = params(k=0.0)
    v = classify(p, 3)
    assert v.not_covered
    assert "k > 0" in v.violated_conditions


def test_p_equals_q_named():
    v = classify(params(p=2.0, q=2.0), 3)
    assert v.violated_conditions == ("p > q or q > p",)


def test_no_regime_flux_exponent_raises():
    v = classify(params(m=3.0), 3)
    with pytest.raises(RegimeError):
        flux_exponent(params(m=3.0), v)


def test_param_validation():
    with pytest.raises(ConfigurationError):
        ProblemParams(a=-1.0, b=1.0, c=1.0, k=1.0, m=2.0, p=2.0, q=2.0)
    with pytest.raises(ConfigurationError):
        ProblemParams(a=1.0, b=1.0, c=1.0, k=1.0, m=1.0, p=2.0, q=2.0)


def test_classify_is_pure():
    p = params()
    assert classify(p, 3) == classify(p, 3)


@settings(max_examples=200, deadline=None)
@given(
    m=st.floats(1.01, 6.0),
    p=st.floats(1.01, 7.0),
    q=st.floats(1.01, 7.0),
    dim=st.sampled_from([1, 2, 3]),
)
def test_random_classification_properties(m, p, q, dim):
    pp = params(m=m, p=p, q=q)
    v = classify(pp, dim)
    blow = v.blowup_bound_3d or v.blowup_bound_2d
    # mutual exclusivity: blow-up needs p > q, global needs q > p
    assert not (blow and v.global_existence)
    assert (v.violated_conditions == ()) == (blow or v.global_existence)
    if blow:
        assert pp.blowup_flux_exponent > 0.0
        assert flux_exponent(pp, v) == pp.blowup_flux_exponent
