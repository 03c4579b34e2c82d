from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from handover.delay import (
    SYMBOLS,
    ZERO,
    Diff,
    Linear,
    Max,
    Min,
    ScenarioParams,
    Sum,
    add,
    canonical_form,
    canonicalize,
    equivalent,
    evaluate,
    parse,
    subtract_linear,
)
from handover.errors import InvalidParameterError, UnsupportedFormError, ValidationError


def L(text):
    return parse(text)


# -- examples ---------------------------------------------------------------


def test_mipv6_loss_window_at_scenario_a(scenario_a):
    e = Linear.of(T=35, f=22, d=6, h=1, F=2)
    assert evaluate(e, scenario_a) == pytest.approx(0.08753104, abs=1e-6)


def test_zero_linear_evaluates_to_zero(scenario_a):
    assert evaluate(ZERO, scenario_a) == 0.0
    assert evaluate(ZERO, {s: 123.0 for s in SYMBOLS}) == 0.0


def test_fmipv6_max_at_scenario_a(scenario_a):
    e = Max((Linear.of(d=2, h=1, T=6), Linear.of(f=4, T=7, d=1)))
    assert evaluate(e, scenario_a) == pytest.approx(0.0175029, abs=1e-6)


def test_add_examples():
    assert add(Linear.of(T=3), Linear.of(T=2, f=1)) == Linear.of(T=5, f=1)
    e = L("max(2d+h+6T, 4f+7T+d)")
    assert equivalent(add(e, ZERO), e)
    acc = ZERO
    for _ in range(4):
        acc = add(acc, Linear.of(d=1, T=2))
    assert acc == Linear.of(d=4, T=8)


def test_subtract_linear_examples():
    later = L("max(6d+8f+h+22T, 12f+4d+23T)")
    got = subtract_linear(later, L("4d+8f+18T"))
    assert equivalent(got, L("max(2d+h+4T, 4f+5T)"))
    assert equivalent(subtract_linear(later, ZERO), later)
    assert subtract_linear(L("36T+22f+6d+h+2F"), L("T")) == L("35T+22f+6d+h+2F")


def test_subtract_nonlinear_rejected():
    with pytest.raises(UnsupportedFormError):
        subtract_linear(L("5T"), L("max(T, f)"))


def test_canonical_form_examples():
    assert canonical_form(Linear.of(f=4, T=4)) == "4T+4f"
    assert canonical_form(ZERO) == "0"
    e = Max((Linear.of(f=3, h=1, F=1, T=5), Linear.of(f=4, T=3)))
    assert canonical_form(e) == "max(5T+3f+F+h, 3T+4f)"


def test_canonical_form_fractions_and_negatives():
    e = Linear.of(T=Fraction(1, 2), f=-3, const=Fraction(-1, 4))
    text = canonical_form(e)
    assert text == "1/2*T-3f-1/4"
    assert parse(text) == e


def test_canonicalize_flattens_and_deduplicates():
    a, b, c = L("T"), L("f"), L("d")
    e = Max((a, Max((b, a)), c))
    assert canonicalize(e) == Max((a, b, c))
    assert canonicalize(Max((a,))) == a


def test_sum_distributes_over_max():
    e = canonicalize(Sum((Max((L("T"), L("f"))), L("d"))))
    assert e == Max((L("T+d"), L("f+d")))


def test_diff_turns_max_into_min():
    e = canonicalize(Diff(L("5T"), Max((L("T"), L("f")))))
    assert e == Min((L("4T"), L("5T-f")))


def test_parse_errors():
    for bad in ["", "2x", "max(T,", "T +", "3T)"]:
        with pytest.raises(ValidationError):
            parse(bad)


def test_float_coefficients_rejected():
    with pytest.raises(TypeError):
        Linear.of(T=0.5)


def test_unknown_symbol_rejected():
    with pytest.raises(ValidationError):
        Linear.of(q=1)


def test_evaluate_missing_or_bad_params():
    with pytest.raises(InvalidParameterError):
        evaluate(L("T+f"), {"T": 1.0})
    with pytest.raises(InvalidParameterError):
        evaluate(L("T"), {s: float("nan") for s in SYMBOLS})


def test_scenario_params_validation():
    with pytest.raises(InvalidParameterError):
        ScenarioParams(T_s=-1, f_s=0, F_s=0, d_s=0)
    with pytest.raises(InvalidParameterError):
        ScenarioParams(T_s=float("inf"), f_s=0, F_s=0, d_s=0)
    p = ScenarioParams(T_s=1, f_s=2, F_s=3, d_s=4)
    assert p.replace(h_s=5).delays()["h"] == 5.0


# -- properties -------------------------------------------------------------

coef = st.integers(min_value=-40, max_value=40)
linears = st.builds(lambda cs: Linear(tuple(cs)), st.lists(coef, min_size=6, max_size=6))
pos_linears = st.builds(lambda cs: Linear(tuple(cs)),
                        st.lists(st.integers(0, 40), min_size=6, max_size=6))
exprs = st.recursive(
    linears,
    lambda kids: st.one_of(
        st.builds(lambda c: Max(tuple(c)), st.lists(kids, min_size=1, max_size=3)),
        st.builds(lambda c: Min(tuple(c)), st.lists(kids, min_size=1, max_size=3)),
        st.builds(lambda c: Sum(tuple(c)), st.lists(kids, min_size=1, max_size=3)),
        st.builds(Diff, kids, kids),
    ),
    max_leaves=8,
)
params = st.fixed_dictionaries({s: st.floats(0, 1e-2, allow_nan=False) for s in SYMBOLS})


def _direct(e, p):
    """Evaluate without canonicalizing."""
    if isinstance(e, Linear):
        return float(e.const) + sum(float(c) * p[s] for c, s in zip(e.coeffs, SYMBOLS))
    if isinstance(e, Max):
        return max(_direct(c, p) for c in e.children)
    if isinstance(e, Min):
        return min(_direct(c, p) for c in e.children)
    if isinstance(e, Sum):
        return sum(_direct(c, p) for c in e.children)
    return _direct(e.left, p) - _direct(e.right, p)


@settings(max_examples=300, deadline=None)
@given(exprs, exprs, params)
def test_add_is_homomorphic(a, b, p):
    assert evaluate(add(a, b), p) == pytest.approx(_direct(a, p) + _direct(b, p), abs=1e-9)


@settings(max_examples=300, deadline=None)
@given(exprs, exprs, params)
def test_max_evaluates_to_max(a, b, p):
    assert evaluate(Max((a, b)), p) == pytest.approx(max(_direct(a, p), _direct(b, p)), abs=1e-9)


@settings(max_examples=300, deadline=None)
@given(exprs, params)
def test_canonicalize_preserves_value(e, p):
    assert evaluate(canonicalize(e), p) == pytest.approx(_direct(e, p), abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(exprs, linears, params)
def test_subtract_linear_value(e, lin, p):
    assert evaluate(subtract_linear(e, lin), p) == pytest.approx(_direct(e, p) - _direct(lin, p), abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(exprs)
def test_canonical_form_round_trips(e):
    c = canonicalize(e)
    assert parse(canonical_form(c)) == c


@settings(max_examples=200, deadline=None)
@given(exprs, exprs)
def test_canonical_form_is_injective(a, b):
    if canonical_form(a) == canonical_form(b):
        assert canonicalize(a) == canonicalize(b)


@settings(max_examples=200, deadline=None)
@given(st.lists(pos_linears, min_size=1, max_size=4), params, st.sampled_from(SYMBOLS),
       st.floats(0, 1e-2))
def test_monotone_in_each_symbol_for_nonnegative_coefficients(children, p, sym, bump):
    e = Max(tuple(children))
    q = dict(p)
    q[sym] += bump
    assert evaluate(e, q) >= evaluate(e, p) - 1e-15
