import math

import numpy as np
import pytest

from chaoscope.montecarlo import (
    CrossSection,
    CutoffFunction,
    KacEnsemble,
    SoftSphereEnsemble,
    anisotropy_fixed_point,
    anisotropy_relaxation_rate,
    estimate_pair_correlation,
    estimate_relaxation_rate,
    sample_anisotropic,
    sample_kac_sphere,
    sample_maxwellian,
    second_moment_anisotropy,
    simulate_kac,
    simulate_soft_spheres,
)


def test_sampling_determinism():
    a = sample_maxwellian(8, 4, seed=5)
    b = sample_maxwellian(8, 4, seed=5)
    assert np.array_equal(a, b)
    c = sample_maxwellian(8, 4, seed=6)
    assert not np.array_equal(a, c)


def test_kac_sphere_invariants():
    v = sample_kac_sphere(16, 10, seed=1)
    assert np.max(np.abs(v.sum(axis=1))) < 1e-12
    energies = (v**2).sum(axis=(1, 2))
    assert np.max(np.abs(energies - 3 * 16)) < 1e-10


def test_simulation_conserves_momentum_and_energy():
    cross = CrossSection.maxwell(1.0)
    ens0 = KacEnsemble(16, 20, sample_maxwellian(16, 20, seed=2), 2)
    ens1 = simulate_kac(ens0, cross, 0.5)
    assert ens1.n_events.sum() > 0
    scale = math.sqrt(float(ens0.energy().mean()))
    assert np.max(np.abs(ens1.momentum() - ens0.momentum())) / scale < 1e-12
    assert np.max(np.abs(ens1.energy() - ens0.energy()) / ens0.energy()) < 1e-12


def test_simulation_determinism():
    cross = CrossSection.maxwell(1.0)
    ens0 = KacEnsemble(8, 5, sample_maxwellian(8, 5, seed=3), 3)
    a = simulate_kac(ens0, cross, 0.3)
    b = simulate_kac(ens0, cross, 0.3)
    assert np.array_equal(a.velocities, b.velocities)
    assert np.array_equal(a.n_events, b.n_events)


def test_thinning_majorant_invariance():
    # inflating the majorant only adds rejected candidates; the accepted
    # collision statistics are unchanged in law (checked on the mean count)
    cross = CrossSection.maxwell(1.0)
    M = 300
    ens0 = KacEnsemble(16, M, sample_maxwellian(16, M, seed=4), 4)
    a = simulate_kac(ens0, cross, 0.5)
    b = simulate_kac(ens0, cross, 0.5, majorant_scale=2.0)
    assert b.n_candidates.sum() > a.n_candidates.sum()
    ma, mb = a.n_events.mean(), b.n_events.mean()
    se = math.sqrt(a.n_events.var() / M + b.n_events.var() / M)
    assert abs(ma - mb) < 4 * se


def test_constant_kernel_acceptance_is_total():
    # for the Maxwell preset every candidate at the exact majorant is accepted
    cross = CrossSection.maxwell(2.0)
    ens0 = KacEnsemble(8, 10, sample_maxwellian(8, 10, seed=5), 5)
    out = simulate_kac(ens0, cross, 0.4)
    assert np.array_equal(out.n_events, out.n_candidates)


def test_soft_sphere_zero_cutoff_is_free_flight():
    rng = np.random.default_rng(6)
    x0 = rng.standard_normal((4, 8, 3))
    v0 = rng.standard_normal((4, 8, 3))
    ens = SoftSphereEnsemble(8, 4, x0.copy(), v0.copy(), CutoffFunction.zero(), 6)
    out = simulate_soft_spheres(ens, CrossSection.maxwell(1.0), 2.0)
    assert np.array_equal(out.positions, x0 + 2.0 * v0)
    assert np.array_equal(out.velocities, v0)
    assert out.n_events.sum() == 0


def test_soft_sphere_collides_inside_support():
    rng = np.random.default_rng(7)
    x0 = 0.1 * rng.standard_normal((8, 16, 3))  # everyone inside the cutoff ball
    v0 = rng.standard_normal((8, 16, 3))
    cutoff = CutoffFunction.indicator(radius=50.0, height=1.0)
    ens = SoftSphereEnsemble(16, 8, x0, v0, cutoff, 7)
    out = simulate_soft_spheres(ens, CrossSection.maxwell(1.0), 0.5)
    assert out.n_events.sum() > 0
    # collisions conserve energy
    assert np.max(np.abs((out.velocities**2).sum(axis=(1, 2)) - (v0**2).sum(axis=(1, 2)))) < 1e-9


def test_pair_correlation_iid_is_null():
    # no dynamics: i.i.d. velocities carry no pair correlation
    ens = KacEnsemble(32, 400, sample_maxwellian(32, 400, seed=8), 8)

    def phi(v):
        return (v**2).sum(axis=-1)

    value, stderr = estimate_pair_correlation(ens, phi, phi)
    assert abs(value) < 3 * stderr


def test_pair_correlation_needs_replicas():
    ens = KacEnsemble(8, 5, sample_maxwellian(8, 5, seed=9), 9)
    with pytest.raises(ValueError):
        estimate_pair_correlation(ens, lambda v: v[..., 0], lambda v: v[..., 0])


def test_anisotropy_oracle_value():
    cross = CrossSection.maxwell(1.5)
    assert anisotropy_relaxation_rate(cross) == pytest.approx(8 * math.pi * 1.5 / 5, rel=1e-15)
    with pytest.raises(ValueError):
        anisotropy_relaxation_rate(CrossSection(func=lambda o, w: 1.0, B_max=1.0))


def test_anisotropy_relaxation_matches_oracle():
    cross = CrossSection.maxwell(1.0)
    oracle = anisotropy_relaxation_rate(cross)
    ens0 = KacEnsemble(64, 400, sample_anisotropic(64, 400, seed=7), 7)
    assert second_moment_anisotropy(ens0) > 1.0
    ens1 = simulate_kac(ens0, cross, 0.2)
    rate, stderr = estimate_relaxation_rate(ens0, ens1, 0.2)
    assert abs(rate - oracle) < 3 * stderr


def test_fixed_point_vanishes_on_sphere():
    v = sample_kac_sphere(16, 10, seed=10)
    ens = KacEnsemble(16, 10, v, 10)
    assert np.max(np.abs(anisotropy_fixed_point(ens))) < 1e-12


def test_ensemble_shape_validation():
    with pytest.raises(ValueError):
        KacEnsemble(4, 2, np.zeros((2, 5, 3)), 0)
