import math

import numpy as np
import pytest

from mhessian.grid import ball_volume, norm_constant
from mhessian.radial import (MassNotConvergedError, cap_of_ball_formula,
                             class_thresholds, combine_profiles,
                             extremal_ball_profile, is_radially_m_subharmonic,
                             kink_masses, phi_alpha_profile, power_profile,
                             quadratic_profile, radial_energy,
                             radial_hessian_density, radial_total_mass,
                             sharp_exponent, shell_mass_conservative,
                             shell_mass_quadrature)

PIN_CASES = [(2, 1), (3, 1), (3, 2), (4, 1), (4, 2), (4, 3)]


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------

def test_quadratic_density_constant():
    p = quadratic_profile(2, 1, 2.0)
    for s in (0.3, 1.0, 1.7):
        assert radial_hessian_density(p, s) == pytest.approx(
            norm_constant(2, 1) * 2, rel=1e-12)


def test_phi_alpha_density_value_and_exponent():
    # n=2, m=1, alpha=0.5: density = c * 0.5 * 0.5 at s = 1, ~ s^{-3}
    p = phi_alpha_profile(0.5, 2, 1)
    c = norm_constant(2, 1)
    assert radial_hessian_density(p, 1.0 - 1e-12) == pytest.approx(0.25 * c, rel=1e-6)
    s = np.array([0.3, 0.5, 0.8])
    d = radial_hessian_density(p, s)
    slope = np.polyfit(np.log(s), np.log(d), 1)[0]
    assert slope == pytest.approx(-3.0, abs=1e-6)


def test_phi_alpha_borderline_density_vanishes():
    # alpha = (n-m)/m makes the profile m-harmonic away from the origin
    n, m = 3, 1
    p = phi_alpha_profile((n - m) / m, n, m)
    d = radial_hessian_density(p, np.array([0.3, 0.6, 0.9]))
    assert np.abs(d).max() < 1e-10


def test_radius_range_validated():
    p = quadratic_profile(2, 1, 2.0)
    with pytest.raises(ValueError):
        radial_hessian_density(p, 2.5)
    with pytest.raises(ValueError):
        radial_hessian_density(p, 0.0)


# ---------------------------------------------------------------------------
# extremal profile
# ---------------------------------------------------------------------------

def test_extremal_profile_values():
    p = extremal_ball_profile(1.0, 2.0, 2, 1)
    assert p.value_at_radius(math.sqrt(2.0)) == pytest.approx(-1.0 / 3.0, abs=1e-6)
    assert p.value_at_radius(0.5) == pytest.approx(-1.0)
    assert p.value_at_radius(2.0) == pytest.approx(0.0, abs=1e-9)


def test_extremal_profile_maximal_on_annulus():
    p = extremal_ball_profile(1.0, 2.0, 3, 2)
    s = np.linspace(1.1, 1.9, 41)
    d = radial_hessian_density(p, s)
    scale = radial_total_mass(p) / ball_volume(3, 2.0)
    assert np.abs(d).max() < 1e-10 * scale


def test_extremal_requires_m_below_n():
    with pytest.raises(ValueError, match="logarithmic"):
        extremal_ball_profile(1.0, 2.0, 2, 2)
    with pytest.raises(ValueError):
        extremal_ball_profile(2.0, 1.0, 2, 1)


# ---------------------------------------------------------------------------
# capacity formula and the normalization pin
# ---------------------------------------------------------------------------

def test_cap_formula_value():
    assert cap_of_ball_formula(1.0, 2.0, 2, 1) == pytest.approx(8.0 / 3.0)


def test_cap_formula_scaling_homogeneity():
    for (n, m) in PIN_CASES:
        base = cap_of_ball_formula(0.7, 1.6, n, m)
        kappa = 1.7
        scaled = cap_of_ball_formula(0.7 * kappa, 1.6 * kappa, n, m)
        assert scaled / base == pytest.approx(kappa ** (2 * (n - m)), rel=1e-12)


def test_cap_formula_monotone_in_r_antitone_in_R():
    vals_r = [cap_of_ball_formula(r, 2.0, 3, 2) for r in (0.5, 0.8, 1.2, 1.6)]
    assert all(a < b for a, b in zip(vals_r, vals_r[1:]))
    vals_R = [cap_of_ball_formula(1.0, R, 3, 2) for R in (1.5, 2.0, 3.0, 5.0)]
    assert all(a > b for a, b in zip(vals_R, vals_R[1:]))


def test_cap_formula_blows_up_as_r_approaches_R():
    assert cap_of_ball_formula(1.999, 2.0, 2, 1) > 1e3


def test_cap_formula_degenerate_m_equals_n():
    with pytest.raises(ValueError):
        cap_of_ball_formula(1.0, 2.0, 3, 3)


def test_normalization_pin_total_mass_matches_formula():
    # this equality is what fixes c(n,m)
    for (n, m) in PIN_CASES:
        prof = extremal_ball_profile(1.0, 2.0, n, m)
        mass = radial_total_mass(prof)
        formula = cap_of_ball_formula(1.0, 2.0, n, m)
        assert abs(mass - formula) / formula < 1e-4


def test_quadratic_total_mass_closed_form():
    from math import comb
    for (n, m) in [(2, 1), (3, 2)]:
        prof = quadratic_profile(n, m, 2.0)
        mass = radial_total_mass(prof)
        expected = norm_constant(n, m) * comb(n, m) * ball_volume(n, 2.0)
        assert abs(mass - expected) / expected < 1e-3


def test_capped_mass_increases_and_converges_with_cap():
    masses = [radial_total_mass(phi_alpha_profile(0.5, 2, 1, cap=M))
              for M in (0.5, 1.0, 2.0, 4.0, 8.0)]
    assert all(a < b + 1e-9 for a, b in zip(masses, masses[1:]))
    full = radial_total_mass(phi_alpha_profile(0.5, 2, 1))
    assert abs(masses[-1] - full) / full < 0.05


def test_shell_mass_quadrature_vs_conservative_oracle():
    prof = phi_alpha_profile(0.4, 3, 2, cap=1.2)
    for (s0, s1) in [(0.2, 0.9), (0.05, 0.5), (0.5, 1.0 - 1e-9)]:
        q = shell_mass_quadrature(prof, s0, s1)
        o = shell_mass_conservative(prof, s0, s1)
        assert q == pytest.approx(o, rel=2e-3, abs=1e-9)


def test_kink_mass_of_extremal_equals_capacity():
    prof = extremal_ball_profile(1.0, 2.0, 3, 1)
    [(r, jump)] = kink_masses(prof)
    assert r == pytest.approx(1.0)
    assert jump == pytest.approx(cap_of_ball_formula(1.0, 2.0, 3, 1), rel=1e-6)


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------

def test_extremal_energy_equals_capacity_any_exponent():
    prof = extremal_ball_profile(1.0, 2.0, 2, 1)
    cap = cap_of_ball_formula(1.0, 2.0, 2, 1)
    for p in (0.5, 1.0, 2.0):
        assert radial_energy(prof, p) == pytest.approx(cap, rel=5e-3)


def test_phi_alpha_energy_divergence_thresholds():
    # q_max = (n-m)/alpha - m = 1 for (2,1,alpha=0.5)
    prof = phi_alpha_profile(0.5, 2, 1)
    assert radial_energy(prof, 2.0) == math.inf
    assert radial_energy(prof, 1.0) == math.inf  # borderline (log) divergent
    assert math.isfinite(radial_energy(prof, 0.5))


def test_energy_scaling_homogeneity():
    prof = phi_alpha_profile(0.3, 2, 1, cap=1.0)
    for p in (0.5, 1.0, 2.0):
        base = radial_energy(prof, p)
        scaled = radial_energy(prof.scaled(2.0), p)
        assert scaled / base == pytest.approx(2.0 ** (prof.m + p), rel=1e-3)


def test_total_mass_monotone_under_ordering():
    # u <= v pointwise (model class) implies mass(u) >= mass(v)
    rng = np.random.default_rng(21)
    from mhessian.randfuncs import random_radial_profile
    for _ in range(25):
        v = random_radial_profile(rng, 3, 2, 2.0)
        extra = random_radial_profile(rng, 3, 2, 2.0)
        u = combine_profiles([v, extra])
        assert radial_total_mass(u) >= radial_total_mass(v) * (1 - 1e-6)


def test_negative_exponent_rejected():
    with pytest.raises(ValueError):
        radial_energy(quadratic_profile(2, 1, 1.0), -0.5)


# ---------------------------------------------------------------------------
# thresholds and the sharp exponent
# ---------------------------------------------------------------------------

def test_class_thresholds_example():
    q_max, p_max = class_thresholds(0.5, 2, 1)
    assert q_max == pytest.approx(1.0)
    assert p_max == pytest.approx(4.0 / 3.0)


def test_class_thresholds_limits():
    q0, _ = class_thresholds(1e-6, 2, 1)
    assert q0 > 1e5
    qe, _ = class_thresholds(1.0 - 1e-12, 2, 1)
    assert qe == pytest.approx(0.0, abs=1e-9)


def test_class_thresholds_range_error():
    with pytest.raises(ValueError, match="not m-subharmonic"):
        class_thresholds(1.5, 2, 1)
    with pytest.raises(ValueError):
        class_thresholds(0.5, 2, 2)


def test_sharp_exponent_example_and_pole():
    assert sharp_exponent(1.2, 2, 1) == pytest.approx(0.5)
    assert sharp_exponent(2.0 - 1e-9, 2, 1) > 1e8
    with pytest.raises(ValueError, match="1 < p < n/m"):
        sharp_exponent(0.9, 2, 1)
    with pytest.raises(ValueError):
        sharp_exponent(2.5, 2, 1)


def test_sharpness_pairing_identity():
    rng = np.random.default_rng(5)
    for (n, m) in PIN_CASES:
        amax = (n - m) / m
        for alpha in rng.uniform(0.02, 0.98, size=50) * amax:
            q_max, p_max = class_thresholds(alpha, n, m)
            q = sharp_exponent(p_max, n, m)
            assert abs(q - q_max) <= 1e-12 * max(1.0, abs(q_max))


# ---------------------------------------------------------------------------
# profile algebra and internal consistency
# ---------------------------------------------------------------------------

def test_combination_stays_m_subharmonic():
    rng = np.random.default_rng(17)
    from mhessian.randfuncs import random_radial_profile
    for _ in range(10):
        p = random_radial_profile(rng, 3, 2, 2.0)
        assert is_radially_m_subharmonic(p)


def test_sampled_chi_consistent_with_chi1():
    p = phi_alpha_profile(0.35, 2, 1, cap=2.0)
    mid = (p.t[:-1] + p.t[1:]) / 2
    num = np.diff(p.chi) / np.diff(p.t)
    ana = np.interp(mid, p.t, p.chi1)
    sel = (mid > 2 * p.t[1]) & (np.abs(mid - 0.16) > 0.05)
    rel = np.abs(num - ana)[sel] / (np.abs(ana[sel]) + 1e-12)
    assert np.quantile(rel, 0.99) < 5e-3


def test_power_profile_is_msh_for_m_equals_n():
    p = power_profile(0.7, 2, 2, 2.0)
    assert is_radially_m_subharmonic(p)
    ps = power_profile(0.7, 2, 2, 2.0, smooth_t0=0.5)
    assert is_radially_m_subharmonic(ps)
    d = radial_hessian_density(ps, 0.1)
    assert math.isfinite(d) and d > 0


def test_blend_has_room_guard():
    p = extremal_ball_profile(1.99, 2.0, 2, 1)
    # kink at 1.99 leaves a narrow shell; the clipped blend must still work
    mass = radial_total_mass(p)
    assert mass == pytest.approx(cap_of_ball_formula(1.99, 2.0, 2, 1), rel=0.01)
