import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaoscope.core import (
    KernelError,
    OneBodyGenerator,
    PairKernel,
    apply_C,
    apply_C_sum,
    apply_K0,
    apply_T,
    apply_T_sum,
    apply_pair_generator,
    check_state,
    l1_norm,
    make_kernel,
    mean_field_Q,
    operator_norm_V,
    symmetrize,
    symmetry_defect,
)
from conftest import random_kernel, random_prob_vector


def brute_force_V(kernel, A):
    """Literal gain-minus-loss double loop."""
    S = kernel.S
    lam = kernel.lam
    out = np.zeros((S, S))
    for a in range(S):
        for b in range(S):
            for a2 in range(S):
                for b2 in range(S):
                    out[a2, b2] += lam[a, b, a2, b2] * A[a, b]
                    out[a, b] -= lam[a, b, a2, b2] * A[a, b]
    return out


def test_uniform_point_mass_formula():
    # V(delta_{(c,d)})(a,b) = beta/S^2 - beta*1{(a,b)=(c,d)}
    S, beta = 2, 1.0
    kern = PairKernel.uniform(S, beta)
    for c in range(S):
        for d in range(S):
            A = np.zeros((S, S))
            A[c, d] = 1.0
            out = apply_pair_generator(kern, A)
            expected = np.full((S, S), beta / S**2)
            expected[c, d] -= beta
            assert np.allclose(out, expected, atol=1e-14)


def test_pair_generator_matches_brute_force():
    rng = np.random.default_rng(3)
    for S in (2, 3):
        kern = random_kernel(rng, S)
        A = rng.standard_normal((S, S))
        assert np.allclose(apply_pair_generator(kern, A), brute_force_V(kern, A), atol=1e-12)


def test_pair_generator_conserves_mass():
    rng = np.random.default_rng(5)
    kern = random_kernel(rng, 3)
    A = rng.standard_normal((3, 3))
    assert abs(apply_pair_generator(kern, A).sum()) < 1e-12


def test_exchange_symmetry_enforced():
    lam = np.zeros((2, 2, 2, 2))
    lam[0, 1, 1, 0] = 1.0  # missing the (1,0)->(0,1) mirror
    with pytest.raises(KernelError):
        PairKernel.weighted(2, lam)


def test_negative_rate_rejected():
    lam = -np.ones((2, 2, 2, 2))
    with pytest.raises(KernelError):
        PairKernel.weighted(2, lam)


def test_apply_T_product_state_brute_force(uniform3):
    # order-3 tensor built from three distinct one-body vectors
    rng = np.random.default_rng(7)
    u, v, w = (random_prob_vector(rng, 3) for _ in range(3))
    A = np.einsum("a,b,c->abc", u, v, w)
    for i, r in [(1, 2), (1, 3), (2, 3)]:
        got = apply_T(uniform3, A, i, r)
        # brute force: apply V to the (i,r) pair for every value of the third slot
        S = 3
        expect = np.zeros((S, S, S))
        other = [q for q in range(3) if q not in (i - 1, r - 1)][0]
        for c in range(S):
            sl = [slice(None)] * 3
            sl[other] = c
            pair = np.moveaxis(A[tuple(sl)], 0, 0)  # already 2d in (i, r) order
            Vp = apply_pair_generator(uniform3, pair)
            expect[tuple(sl)] = Vp
        assert np.allclose(got, expect, atol=1e-13)


def test_apply_C_matches_T_then_contract():
    rng = np.random.default_rng(11)
    kern = random_kernel(rng, 2)
    A = rng.standard_normal((2, 2, 2))
    for i in (1, 2):
        via_T = apply_T(kern, A, i, 3).sum(axis=-1)
        assert np.allclose(apply_C(kern, A, i), via_T, atol=1e-13)


def test_apply_C_brute_force_j2():
    rng = np.random.default_rng(13)
    kern = random_kernel(rng, 3)
    A = rng.standard_normal((3, 3, 3))
    got = apply_C(kern, A, 1)
    expect = np.zeros((3, 3))
    for b in range(3):
        sl = A[:, b, :]
        expect[:, b] = apply_pair_generator(kern, sl).sum(axis=1)
    assert np.allclose(got, expect, atol=1e-13)


def test_T_sum_and_C_sum_agree_with_loops():
    rng = np.random.default_rng(17)
    kern = random_kernel(rng, 2)
    A = rng.standard_normal((2, 2, 2, 2))
    expect_T = sum(apply_T(kern, A, i, r) for i in (1, 2, 3, 4) for r in range(i + 1, 5))
    assert np.allclose(apply_T_sum(kern, A), expect_T, atol=1e-13)
    expect_C = sum(apply_C(kern, A, i) for i in (1, 2, 3))
    assert np.allclose(apply_C_sum(kern, A), expect_C, atol=1e-13)


def test_Q_uniform_closed_form(uniform2):
    rng = np.random.default_rng(19)
    f = random_prob_vector(rng, 2)
    got = mean_field_Q(uniform2, f, f)
    assert np.allclose(got, 1.0 * (0.5 - f), atol=1e-14)


def test_operator_norm_values(uniform2, swap2):
    assert operator_norm_V(uniform2) == pytest.approx(1.5, abs=1e-14)
    assert operator_norm_V(swap2) == pytest.approx(2.0, abs=1e-14)


def test_operator_norm_is_attained():
    # the L1->L1 norm bounds the action on arbitrary tensors and is attained on
    # some point mass
    rng = np.random.default_rng(23)
    kern = random_kernel(rng, 2)
    nv = operator_norm_V(kern)
    best = 0.0
    for _ in range(200):
        A = rng.standard_normal((2, 2))
        best = max(best, l1_norm(apply_pair_generator(kern, A)) / l1_norm(A))
    assert best <= nv + 1e-12
    for c in range(2):
        for d in range(2):
            A = np.zeros((2, 2))
            A[c, d] = 1.0
            best = max(best, l1_norm(apply_pair_generator(kern, A)))
    assert best == pytest.approx(nv, abs=1e-12)


def test_symmetrize_and_defect():
    rng = np.random.default_rng(29)
    A = rng.standard_normal((2, 2, 2))
    S = symmetrize(A)
    assert symmetry_defect(S) < 1e-14
    assert symmetry_defect(A) > 0


def test_check_state_validates():
    good = np.full((2, 2), 0.25)
    check_state(good)
    with pytest.raises(ValueError):
        check_state(np.array([[0.9, 0.4], [-0.2, -0.1]]))
    with pytest.raises(ValueError):
        check_state(np.array([[0.7, 0.1], [0.15, 0.05]]))  # asymmetric


def test_one_body_generator_validation():
    with pytest.raises(KernelError):
        OneBodyGenerator(np.array([[1.0, 0.0], [0.0, 1.0]]))
    OneBodyGenerator(np.array([[-1.0, 2.0], [1.0, -2.0]]))


def test_make_kernel_presets():
    assert make_kernel("uniform", 3).preset == "uniform"
    assert make_kernel("swap", 2).preset == "swap"
    with pytest.raises(KernelError):
        make_kernel("weighted", 2)
    with pytest.raises(KernelError):
        make_kernel("nope", 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.integers(0, 10_000))
def test_V_conservative_property(S, seed):
    rng = np.random.default_rng(seed)
    kern = random_kernel(rng, S)
    A = rng.standard_normal((S, S))
    assert abs(apply_pair_generator(kern, A).sum()) < 1e-10


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_K0_mass_conserving(seed):
    rng = np.random.default_rng(seed)
    off = np.abs(rng.standard_normal((3, 3)))
    np.fill_diagonal(off, 0.0)
    k0 = off - np.diag(off.sum(axis=0))
    gen = OneBodyGenerator(k0)
    A = rng.standard_normal((3, 3))
    assert abs(apply_K0(gen, A).sum()) < 1e-10
