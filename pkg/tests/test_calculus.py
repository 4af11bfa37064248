import numpy as np
import pytest

from mhessian.calculus import (ComplexHessianField, NotMSubharmonicError,
                               complex_hessian, grid_quadrature,
                               hessian_measure_smooth, integrate,
                               is_m_positive, mixed_measure, polarized_sigma_m,
                               sigma_k)
from mhessian.grid import GridDomain, GridFunction, ball_volume, norm_constant
from mhessian.radial import (phi_alpha_profile, radial_hessian_density,
                             sample_to_grid)


def make_domain(m=1, P=13, R=2.0):
    return GridDomain(n=2, m=m, R=R, points_per_axis=P)


def quadratic(dom, scale=1.0):
    vals = np.where(dom.interior, scale * (dom.radius_sq - dom.R**2), 0.0)
    return GridFunction(dom, vals)


# ---------------------------------------------------------------------------
# complex_hessian
# ---------------------------------------------------------------------------

def test_hessian_of_radius_squared_is_identity():
    dom = make_domain()
    u = GridFunction(dom, dom.radius_sq.copy())
    f = complex_hessian(u)
    inter = dom.interior
    assert np.abs(f.H11 - 1.0)[inter].max() < 1e-12
    assert np.abs(f.H22 - 1.0)[inter].max() < 1e-12
    assert np.abs(f.reH12)[inter].max() < 1e-12
    assert np.abs(f.imH12)[inter].max() < 1e-12
    lam1, lam2 = f.lam
    assert np.abs(lam1 - 1.0)[inter].max() < 1e-12
    assert np.abs(lam2 - 1.0)[inter].max() < 1e-12


def test_hessian_of_pluriharmonic_vanishes():
    dom = make_domain()
    x1, y1, _, _ = (np.broadcast_to(c, dom.shape) for c in dom.coords())
    u = GridFunction(dom, x1**2 - y1**2)  # Re(z1^2)
    f = complex_hessian(u)
    inter = dom.interior
    for comp in (f.H11, f.H22, f.reH12, f.imH12):
        assert np.abs(comp)[inter].max() < 1e-12


def test_hessian_matrices_hermitian_and_trace_consistent():
    rng = np.random.default_rng(0)
    dom = make_domain(P=9)
    u = GridFunction(dom, rng.standard_normal(dom.shape))
    f = complex_hessian(u, boundary="raw")
    H = f.matrices()
    asym = np.abs(H - np.conj(np.transpose(H, (0, 2, 1)))).max()
    assert asym == 0.0  # symmetrized by construction
    lam = f.eigenvalues()
    trace = np.real(H[:, 0, 0] + H[:, 1, 1])
    rel = np.abs(lam.sum(axis=1) - trace) / (np.abs(trace) + 1e-30)
    assert rel.max() < 1e-10
    assert np.all(np.diff(lam, axis=1) >= 0)  # ascending


def test_smoothed_power_profile_matches_analytic_radial_eigenvalues():
    # eigenvalues of a radial function are (chi', chi' + t chi'')
    alpha, t0 = 0.5, 0.3
    dom = GridDomain(n=2, m=1, R=2.0, points_per_axis=25)
    prof = phi_alpha_profile(alpha, 2, 1, R=2.0, smooth_t0=t0)
    u = sample_to_grid(prof, dom)
    f = complex_hessian(u)
    pt = (18, 12, 12, 12)  # |z| = 1.0, inside the smooth region
    s = float(dom.radius[pt])
    t = s * s
    assert t > t0
    R2 = 4.0
    chi1 = (alpha / R2) * (t / R2) ** (-alpha - 1)
    chi2 = -(alpha * (alpha + 1) / R2**2) * (t / R2) ** (-alpha - 2)
    lam1, lam2 = f.lam
    got = sorted([float(lam1[pt]), float(lam2[pt])])
    want = sorted([chi1, chi1 + t * chi2])
    h = dom.h
    for g, w in zip(got, want):
        assert abs(g - w) < 10 * h**2 * max(1.0, abs(w))


def test_underresolved_grid_rejected():
    with pytest.raises(ValueError):
        GridDomain(n=2, m=1, R=1.0, points_per_axis=7)


# ---------------------------------------------------------------------------
# sigma_k
# ---------------------------------------------------------------------------

def test_sigma_k_values():
    assert sigma_k([1.0, 2.0, 3.0], 2) == pytest.approx(11.0)
    assert sigma_k([1.0, 2.0, 3.0], 0) == pytest.approx(1.0)
    assert sigma_k([2.0, -1.0], 2) == pytest.approx(-2.0)
    from math import comb
    for n in (2, 3, 4):
        for m in range(1, n + 1):
            assert sigma_k(np.ones(n), m) == pytest.approx(comb(n, m))


def test_sigma_k_range_errors():
    with pytest.raises(ValueError):
        sigma_k([1.0, 2.0], 3)
    with pytest.raises(ValueError):
        sigma_k([1.0, 2.0], -1)


# ---------------------------------------------------------------------------
# is_m_positive
# ---------------------------------------------------------------------------

def test_identity_field_is_positive_all_m():
    for m in (1, 2):
        dom = make_domain(m=m)
        u = GridFunction(dom, dom.radius_sq.copy())
        ok = is_m_positive(complex_hessian(u))
        assert ok.all()


def test_mixed_signature_depends_on_m():
    # lambda = (2, -1): sigma_1 = 1 >= 0 but sigma_2 = -2 < 0
    lam = np.array([-1.0, 2.0])
    assert sigma_k(lam, 1) >= 0
    assert sigma_k(lam, 2) < 0


def test_phi_alpha_positivity_threshold_on_grid():
    dom = GridDomain(n=2, m=1, R=2.0, points_per_axis=25)
    good = sample_to_grid(phi_alpha_profile(0.5, 2, 1, R=2.0, smooth_t0=0.8), dom)
    ok = is_m_positive(complex_hessian(good))
    assert ok.all()
    bad = sample_to_grid(phi_alpha_profile(1.5, 2, 1, R=2.0, smooth_t0=0.8), dom)
    okb = is_m_positive(complex_hessian(bad))
    assert not okb.all()


def test_cone_nesting():
    # m-positive implies m'-positive for m' <= m
    rng = np.random.default_rng(3)
    dom2 = make_domain(m=2)
    dom1 = make_domain(m=1)
    from mhessian.randfuncs import random_grid_function
    u2 = random_grid_function(rng, dom2)
    f2 = complex_hessian(u2)
    ok2 = is_m_positive(f2)
    f1 = ComplexHessianField(dom1, f2.H11, f2.H22, f2.reH12, f2.imH12, f2.clean)
    ok1 = is_m_positive(f1)
    assert (ok1 | ~ok2).all()


def test_negative_tolerance_rejected():
    dom = make_domain()
    u = GridFunction(dom, dom.radius_sq.copy())
    with pytest.raises(ValueError):
        is_m_positive(complex_hessian(u), tol=-1.0)


# ---------------------------------------------------------------------------
# hessian_measure_smooth
# ---------------------------------------------------------------------------

def test_quadratic_measure_constant_density():
    from math import comb
    for m in (1, 2):
        dom = make_domain(m=m, P=17)
        md = hessian_measure_smooth(quadratic(dom))
        expected = norm_constant(2, m) * comb(2, m)
        sel = md.clean
        assert np.abs(md.density - expected)[sel].max() < 1e-10


def test_pluriharmonic_measure_zero():
    dom = make_domain()
    x1, y1, _, _ = (np.broadcast_to(c, dom.shape) for c in dom.coords())
    u = GridFunction(dom, x1**2 - y1**2)
    md = hessian_measure_smooth(u, check=False, boundary="raw")
    assert np.abs(md.density)[dom.interior].max() < 1e-12


def test_phi_alpha_density_power_law():
    dom = GridDomain(n=2, m=1, R=2.0, points_per_axis=25)
    prof = phi_alpha_profile(0.5, 2, 1, R=2.0, smooth_t0=0.3)
    u = sample_to_grid(prof, dom)
    md = hessian_measure_smooth(u)
    mid = 12
    # compare against the radial closed form at two radii outside smoothing;
    # the discretization error carries the profile's fourth-derivative scale
    for idx in ((18, mid, mid, mid), (20, mid, mid, mid)):
        s = float(dom.radius[idx])
        want = radial_hessian_density(prof, s)
        got = float(md.density[idx])
        assert abs(got - want) / want < 8 * dom.h**2


def test_not_msubharmonic_raises_with_point():
    dom = make_domain()
    u = GridFunction(dom, np.where(dom.interior, -(dom.radius_sq - 4.0), 0.0))
    with pytest.raises(NotMSubharmonicError, match="not m-subharmonic at point"):
        hessian_measure_smooth(u, tol=1e-6)


def test_affine_invariance_pluriharmonic_shift():
    dom = make_domain(m=2)
    rng = np.random.default_rng(7)
    from mhessian.randfuncs import random_grid_function
    u = random_grid_function(rng, dom)
    x1, y1, _, _ = (np.broadcast_to(c, dom.shape) for c in dom.coords())
    shift = GridFunction(dom, u.values + 0.05 * (x1**2 - y1**2))
    d0 = hessian_measure_smooth(u, check=False, boundary="raw")
    d1 = hessian_measure_smooth(shift, check=False, boundary="raw")
    sel = dom.interior
    scale = np.abs(d0.density[sel]).max()
    assert np.abs(d0.density - d1.density)[sel].max() < 1e-10 * max(scale, 1.0)


def test_density_scaling_homogeneity():
    rng = np.random.default_rng(9)
    from mhessian.randfuncs import random_grid_function
    for m in (1, 2):
        dom = make_domain(m=m)
        u = random_grid_function(rng, dom)
        d1 = hessian_measure_smooth(u, check=False)
        d2 = hessian_measure_smooth(3.0 * u, check=False)
        sel = dom.interior
        assert np.allclose(d2.density[sel], 3.0**m * d1.density[sel],
                           rtol=1e-12, atol=1e-12)


def test_refinement_order_against_radial_closed_form():
    errs = {}
    prof = phi_alpha_profile(0.4, 2, 1, R=2.0, smooth_t0=0.8)
    for P in (13, 25):
        dom = GridDomain(n=2, m=1, R=2.0, points_per_axis=P)
        u = sample_to_grid(prof, dom)
        md = hessian_measure_smooth(u)
        sel = md.clean & (dom.radius > 0.3) & (dom.radius < 0.85 * dom.R)
        want = np.zeros(dom.shape)
        want[sel] = radial_hessian_density(prof, dom.radius[sel])
        errs[P] = np.abs(md.density - want)[sel].max()
    order = np.log(errs[13] / errs[25]) / np.log(2.0)
    assert order >= 1.7


# ---------------------------------------------------------------------------
# integrate
# ---------------------------------------------------------------------------

def test_integrate_constant_density_ball_volume():
    dom = GridDomain(n=2, m=1, R=2.0, points_per_axis=25)
    md = hessian_measure_smooth(quadratic(dom))
    total = integrate(md, 1.0)
    expected = norm_constant(2, 1) * 2 * ball_volume(2, 2.0)
    assert abs(total - expected) / expected < 0.01


def test_integrate_zero_weight():
    dom = make_domain()
    md = hessian_measure_smooth(quadratic(dom))
    assert integrate(md, 0.0) == 0.0


def test_integrate_surface_mass_with_weight():
    dom = make_domain(P=17)
    from mhessian.grid import MeasureDensity
    md = MeasureDensity(dom, dom.zeros(), surface=[(1.0, 3.0)])
    w = quadratic(dom)  # value |z|^2 - 4 -> -3 on the sphere s=1
    got = integrate(md, w)
    assert abs(got - 3.0 * (-3.0)) < 0.05 * 9.0
    assert integrate(md, 1.0) == pytest.approx(3.0)


# ---------------------------------------------------------------------------
# polarization
# ---------------------------------------------------------------------------

def test_polarized_diagonal_matches_sigma():
    rng = np.random.default_rng(11)
    dom = make_domain(m=2, P=9)
    from mhessian.randfuncs import random_grid_function
    u = random_grid_function(rng, dom)
    f = complex_hessian(u)
    diag = polarized_sigma_m([f, f], 2)
    sel = dom.interior
    rel = np.abs(diag - f.sigma(2))[sel].max()
    assert rel < 1e-10 * max(np.abs(f.sigma(2))[sel]).max()


def test_polarization_brute_force_identity():
    # D_2(A,B) = (sigma_2(A+B) - sigma_2(A) - sigma_2(B)) / 2 pointwise
    rng = np.random.default_rng(13)
    dom = make_domain(m=2, P=9)
    from mhessian.randfuncs import random_grid_function
    a = complex_hessian(random_grid_function(rng, dom))
    b = complex_hessian(random_grid_function(rng, dom))
    lhs = polarized_sigma_m([a, b], 2)
    rhs = 0.5 * ((a + b).sigma(2) - a.sigma(2) - b.sigma(2))
    sel = dom.interior
    assert np.abs(lhs - rhs)[sel].max() < 1e-12 * (1 + np.abs(rhs[sel]).max())


def test_mixed_measure_pluriharmonic_part_drops():
    # v2 = Re(z1^2) + v1: mixed density with (v1, v2) equals that of (v1, v1)
    dom = make_domain(m=2, P=13)
    v1 = quadratic(dom)
    x1, y1, _, _ = (np.broadcast_to(c, dom.shape) for c in dom.coords())
    v2 = GridFunction(dom, v1.values + 0.1 * (x1**2 - y1**2))
    f1 = complex_hessian(v1, boundary="raw")
    f2 = complex_hessian(v2, boundary="raw")
    d12 = mixed_measure([f1, f2], 2, dom)
    d11 = mixed_measure([f1, f1], 2, dom)
    sel = dom.interior
    assert np.abs(d12.density - d11.density)[sel].max() < 1e-10
