import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaoscope.bounds import (
    HypothesisViolation,
    all_pass,
    alpha,
    check_corollary,
    check_main_theorem,
    compute_constants,
    exp_or_inf,
    log_le,
    report_json,
    subset_alpha_identity,
)


def test_constant_values():
    c = compute_constants(1.0, 1.0)
    assert c.C2 == pytest.approx(16.0 * (2 * math.e) ** (1 + 1 / (12 * math.e)), rel=1e-15)
    assert c.C2 == pytest.approx(91.63, rel=1e-3)
    assert c.C1 == pytest.approx(2.37e4, rel=1e-2)
    assert c.B1 == 2 * c.C1
    assert c.B2 == pytest.approx(1.0 + 0.5 + 16 * c.C2**2 / (c.C1 - 2), rel=1e-15)
    assert c.D1 == max(c.B1, 2 * c.C1)
    assert c.D2 == max(c.B2, 8 * (math.e * c.C2) ** 2)


def test_constants_linear_in_C0():
    c1 = compute_constants(1.0)
    c3 = compute_constants(3.0)
    assert c3.C2 == pytest.approx(3 * c1.C2, rel=1e-14)
    assert c3.C1 == c1.C1


def test_constant_domain_checks():
    with pytest.raises(ValueError):
        compute_constants(0.5)
    with pytest.raises(ValueError):
        compute_constants(1.0, 0.0)


def test_identity_examples():
    lhs, rhs = subset_alpha_identity(5, 20, 0)
    assert lhs == rhs == alpha(5, 20)
    lhs, rhs = subset_alpha_identity(5, 20, 1)
    assert rhs == -1.0 / 20
    assert abs(lhs - rhs) < 1e-15
    lhs, rhs = subset_alpha_identity(5, 20, 2)
    assert rhs == 0.0
    assert abs(lhs) < 1e-15


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 12), st.integers(0, 12), st.sampled_from([2, 4, 8, 16, 32, 64]))
def test_identity_property(j, r, N):
    if r > j or j > N:
        return
    lhs, rhs = subset_alpha_identity(j, N, r)
    assert abs(lhs - rhs) <= 1e-12


def test_main_theorem_zero_norms_pass():
    c = compute_constants()
    rows = check_main_theorem({(1, 0.0): 0.0, (1, 1.0): 0.0, (2, 0.0): 0.0, (2, 1.0): 0.0}, c, 1.5, 16)
    assert all_pass(rows)


def test_main_theorem_hypothesis_violation():
    c = compute_constants()
    with pytest.raises(HypothesisViolation):
        check_main_theorem({(2, 0.0): 3.0}, c, 1.5, 1000)


def test_corollary_constructed_violation():
    c = compute_constants()
    # bound at t=0 is D2 j^2 / N; pick a value above it
    N = 4
    too_big = c.D2 * 4 / N * 2
    rows = check_corollary({(2, 0.0): too_big}, c, 1.5, N)
    assert not all_pass(rows)
    rows_ok = check_corollary({(2, 0.0): 0.1}, c, 1.5, N)
    assert all_pass(rows_ok)


def test_log_space_helpers():
    assert exp_or_inf(10.0) == pytest.approx(math.exp(10.0))
    assert exp_or_inf(1e5) == math.inf
    assert log_le(0.0, -1e9)
    assert log_le(1.0, 0.0)
    assert not log_le(math.e**2, 1.0)


def test_report_json_round_trips():
    c = compute_constants()
    rows = check_corollary({(1, 1.0): 0.01}, c, 1.5, 8)
    data = json.loads(report_json(rows))
    assert data[0]["pass"] is True
    assert data[0]["j"] == 1


def test_alpha_bounds():
    assert alpha(0, 10) == 1.0
    assert alpha(10, 10) == 0.0
    with pytest.raises(ValueError):
        alpha(11, 10)


def test_identity_enumeration_cap():
    with pytest.raises(ValueError):
        subset_alpha_identity(30, 64, 25)
