"""Exact calculus for radially symmetric potentials u(z) = chi(|z|^2).

For u = chi(t), t = |z|^2, the complex Hessian has eigenvalue chi'(t) with
multiplicity n-1 and chi'(t) + t chi''(t) once, so

    sigma_m = (chi')^{m-1} [ binom(n,m) chi' + binom(n-1,m-1) t chi'' ],

which also admits the conservative form

    sigma_m = (binom(n,m)/n) t^{1-n} d/dt [ t^n (chi')^m ].

The conservative form makes shell masses exact boundary terms and turns
kinks into explicit surface masses; it is used here as the independent
cross-check of the blended quadrature.

Profiles are stored as dense samples of (chi, chi', chi'') on a geometric
t-grid (default resolution ~4096 samples per decade) with kink locations
tracked explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from math import comb, factorial, pi

import numpy as np

from .grid import GridDomain, GridFunction, norm_constant

SAMPLES_PER_DECADE = 4096
TINY_T_FACTOR = 1e-14

#: increments growing faster than this ratio across nested cutoffs flag a
#: divergent quadrature (robust for the power-law integrands this serves)
DIVERGENCE_RATIO = 1.5


class MassNotConvergedError(RuntimeError):
    pass


def volume_factor(n: int) -> float:
    """dV = volume_factor(n) * t^{n-1} dt for radial integrands, t = s^2."""
    return pi**n / factorial(n - 1)


def _tgrid(lo: float, hi: float, include_zero: bool = False,
           insert: tuple = ()) -> np.ndarray:
    decades = max(np.log10(hi / lo), 0.1)
    npts = int(np.ceil(SAMPLES_PER_DECADE * decades)) + 1
    t = np.geomspace(lo, hi, npts)
    extra = [np.asarray(insert, dtype=float)] if len(insert) else []
    if include_zero:
        extra.append(np.array([0.0]))
    if extra:
        t = np.unique(np.concatenate([t] + extra))
    return t


@dataclass
class RadialProfile:
    """Sampled radial potential chi(|z|^2) with derivative columns.

    ``kinks`` are t-values where chi' jumps (surface measure lives there);
    derivative columns hold the right-hand branch at a kink sample.
    ``alpha``/``cap_level``/``smooth_t0`` are classification hints for the
    power family; ``bounded`` distinguishes profiles safe to sample on grids.
    """

    n: int
    m: int
    R: float
    t: np.ndarray
    chi: np.ndarray
    chi1: np.ndarray
    chi2: np.ndarray
    kinks: tuple = ()
    alpha: float | None = None
    cap_level: float | None = None
    smooth_t0: float | None = None
    bounded: bool = True
    label: str = ""

    def __post_init__(self):
        if not (1 <= self.m <= self.n):
            raise ValueError(f"need 1 <= m <= n, got m={self.m}, n={self.n}")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("t grid must be strictly increasing")

    @property
    def c_nm(self) -> float:
        return norm_constant(self.n, self.m)

    def chi_at(self, t):
        return np.interp(t, self.t, self.chi)

    def chi1_at(self, t):
        return np.interp(t, self.t, self.chi1)

    def value_at_radius(self, s):
        return self.chi_at(np.asarray(s, dtype=float) ** 2)

    def scaled(self, a: float) -> "RadialProfile":
        if a <= 0:
            raise ValueError("scaling factor must be positive")
        return replace(self, chi=a * self.chi, chi1=a * self.chi1,
                       chi2=a * self.chi2, alpha=None,
                       label=f"{a:g}*({self.label})")


def combine_profiles(profiles, weights=None) -> RadialProfile:
    """Positive linear combination of profiles on the union sample grid
    (the model classes are convex cones, so the result stays admissible)."""
    profiles = list(profiles)
    if weights is None:
        weights = [1.0] * len(profiles)
    if len(weights) != len(profiles) or any(w <= 0 for w in weights):
        raise ValueError("need one positive weight per profile")
    n, m = profiles[0].n, profiles[0].m
    R = max(p.R for p in profiles)
    if any(p.n != n or p.m != m for p in profiles):
        raise ValueError("profiles must share (n, m)")
    t = np.unique(np.concatenate([p.t for p in profiles]))
    chi = sum(w * np.interp(t, p.t, p.chi) for w, p in zip(weights, profiles))
    chi1 = sum(w * np.interp(t, p.t, p.chi1) for w, p in zip(weights, profiles))
    chi2 = sum(w * np.interp(t, p.t, p.chi2) for w, p in zip(weights, profiles))
    kinks = tuple(sorted({k for p in profiles for k in p.kinks}))
    return RadialProfile(n=n, m=m, R=R, t=t, chi=chi, chi1=chi1, chi2=chi2,
                         kinks=kinks, bounded=all(p.bounded for p in profiles),
                         label="+".join(p.label for p in profiles))


# ---------------------------------------------------------------------------
# profile constructors
# ---------------------------------------------------------------------------

def quadratic_profile(n: int, m: int, R: float, scale: float = 1.0) -> RadialProfile:
    """u = scale (|z|^2 - R^2): identity Hessian times scale."""
    t = _tgrid(R * R * 1e-6, R * R, include_zero=True)
    return RadialProfile(n=n, m=m, R=R, t=t, chi=scale * (t - R * R),
                         chi1=np.full_like(t, scale), chi2=np.zeros_like(t),
                         label=f"quad(scale={scale:g})")


def phi_alpha_profile(alpha: float, n: int, m: int, R: float = 1.0,
                      cap: float | None = None,
                      smooth_t0: float | None = None) -> RadialProfile:
    """The power family 1 - (|z|/R)^{-2 alpha}, m-subharmonic exactly for
    0 < alpha < (n-m)/m.

    ``cap`` replaces the profile by max(., -cap); ``smooth_t0`` replaces chi
    on [0, t0] by its second-order Taylor polynomial matched at t0 (both give
    bounded C^0 / C^2 representatives; choose one explicitly).
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if cap is not None and smooth_t0 is not None:
        raise ValueError("choose either cap or smooth_t0, not both")
    R2 = R * R

    def base(t):
        return 1.0 - (t / R2) ** (-alpha)

    def base1(t):
        return (alpha / R2) * (t / R2) ** (-alpha - 1)

    def base2(t):
        return -(alpha * (alpha + 1) / R2**2) * (t / R2) ** (-alpha - 2)

    if smooth_t0 is not None:
        t0 = float(smooth_t0)
        if not (0 < t0 < R2):
            raise ValueError("smooth_t0 must lie in (0, R^2)")
        c0, d1, d2 = base(t0), base1(t0), base2(t0)
        t = _tgrid(t0 * 1e-4, R2, include_zero=True, insert=(t0,))
        low = t < t0
        chi = np.where(low, c0 + d1 * (t - t0) + 0.5 * d2 * (t - t0) ** 2, base(np.maximum(t, t0 * 1e-6)))
        chi1 = np.where(low, d1 + d2 * (t - t0), base1(np.maximum(t, t0 * 1e-6)))
        chi2 = np.where(low, d2, base2(np.maximum(t, t0 * 1e-6)))
        return RadialProfile(n=n, m=m, R=R, t=t, chi=chi, chi1=chi1, chi2=chi2,
                             alpha=alpha, smooth_t0=t0,
                             label=f"phi(alpha={alpha:g},smooth={t0:g})")

    if cap is not None:
        M = float(cap)
        if M <= 0:
            raise ValueError("cap must be positive")
        t_cap = R2 * (1.0 + M) ** (-1.0 / alpha)
        t = _tgrid(t_cap * 1e-3, R2, include_zero=True, insert=(t_cap,))
        low = t < t_cap
        safe = np.maximum(t, t_cap * 1e-9)
        chi = np.where(low, -M, np.maximum(base(safe), -M))
        chi1 = np.where(low, 0.0, base1(safe))
        chi2 = np.where(low, 0.0, base2(safe))
        return RadialProfile(n=n, m=m, R=R, t=t, chi=chi, chi1=chi1, chi2=chi2,
                             kinks=(t_cap,), alpha=alpha, cap_level=M,
                             label=f"phi(alpha={alpha:g},cap={M:g})")

    t = _tgrid(R2 * TINY_T_FACTOR, R2)
    return RadialProfile(n=n, m=m, R=R, t=t, chi=base(t), chi1=base1(t),
                         chi2=base2(t), alpha=alpha, bounded=False,
                         label=f"phi(alpha={alpha:g})")


def power_profile(kappa: float, n: int, m: int, R: float,
                  scale: float = 1.0,
                  smooth_t0: float | None = None) -> RadialProfile:
    """u = scale ((t/R^2)^kappa - 1), m-subharmonic for every m <= n when
    0 < kappa <= 1; the m = n singular stand-in for the alpha family.

    ``smooth_t0`` replaces the profile on [0, t0] by its second-order Taylor
    polynomial at t0 (the Hessian density is then bounded; the patch stays
    in the cone since the bracket is linear in t with nonnegative ends)."""
    if not (0 < kappa <= 1):
        raise ValueError("kappa must lie in (0, 1]")
    R2 = R * R

    def base(t):
        return scale * ((t / R2) ** kappa - 1.0)

    def base1(t):
        return scale * (kappa / R2) * (t / R2) ** (kappa - 1.0)

    def base2(t):
        return scale * (kappa * (kappa - 1.0) / R2**2) * (t / R2) ** (kappa - 2.0)

    if smooth_t0 is not None:
        t0 = float(smooth_t0)
        if not (0 < t0 < R2):
            raise ValueError("smooth_t0 must lie in (0, R^2)")
        c0, d1, d2 = base(t0), base1(t0), base2(t0)
        t = _tgrid(t0 * 1e-4, R2, include_zero=True, insert=(t0,))
        low = t < t0
        safe = np.maximum(t, t0 * 1e-6)
        chi = np.where(low, c0 + d1 * (t - t0) + 0.5 * d2 * (t - t0) ** 2,
                       base(safe))
        chi1 = np.where(low, d1 + d2 * (t - t0), base1(safe))
        chi2 = np.where(low, d2, base2(safe))
        return RadialProfile(n=n, m=m, R=R, t=t, chi=chi, chi1=chi1,
                             chi2=chi2, smooth_t0=t0,
                             label=f"power(kappa={kappa:g},smooth={t0:g})")

    t = _tgrid(R2 * 1e-12, R2, include_zero=True)
    safe = np.maximum(t, R2 * 1e-14)
    x = (safe / R2) ** kappa
    chi = scale * (np.where(t == 0.0, 0.0, x) - 1.0)
    chi1 = scale * kappa * x / safe
    chi2 = scale * kappa * (kappa - 1.0) * x / safe**2
    big = 1.0 / (R2 * 1e-14)
    chi1 = np.where(t == 0.0, scale * kappa * big if kappa < 1 else scale / R2, chi1)
    chi2 = np.where(t == 0.0, chi2[1], chi2)
    return RadialProfile(n=n, m=m, R=R, t=t, chi=chi, chi1=chi1, chi2=chi2,
                         label=f"power(kappa={kappa:g})")


def extremal_ball_profile(r: float, R: float, n: int, m: int) -> RadialProfile:
    """Relative extremal function of B(r) in B(R):
    max((R^{2-2a} - |z|^{2-2a}) / (r^{2-2a} - R^{2-2a}), -1), a = n/m > 1."""
    if m >= n:
        raise ValueError("use logarithmic kernel, unsupported (needs m < n)")
    if not (0 < r < R):
        raise ValueError("need 0 < r < R")
    a = n / m
    D = r ** (2 - 2 * a) - R ** (2 - 2 * a)
    rr, RR = r * r, R * R
    t = _tgrid(rr * 1e-4, RR, include_zero=True, insert=(rr,))
    low = t < rr
    safe = np.maximum(t, rr * 1e-9)
    kernel = (R ** (2 - 2 * a) - safe ** (1 - a)) / D
    chi = np.where(low, -1.0, np.maximum(kernel, -1.0))
    chi1 = np.where(low, 0.0, (a - 1) * safe ** (-a) / D)
    chi2 = np.where(low, 0.0, -a * (a - 1) * safe ** (-a - 1) / D)
    return RadialProfile(n=n, m=m, R=R, t=t, chi=chi, chi1=chi1, chi2=chi2,
                         kinks=(rr,), label=f"extremal(r={r:g},R={R:g})")


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def cap_of_ball_formula(r: float, R: float, n: int, m: int) -> float:
    """Capacity of B(r) relative to B(R): 2^n (n-m) / (m n! (r^{2-2a} - R^{2-2a})^m)."""
    if m >= n:
        raise ValueError("capacity formula degenerates at m = n (factor n - m)")
    if not (0 < r < R):
        raise ValueError("need 0 < r < R")
    a = n / m
    return 2.0**n * (n - m) / (m * factorial(n)
                               * (r ** (2 - 2 * a) - R ** (2 - 2 * a)) ** m)


def class_thresholds(alpha: float, n: int, m: int) -> tuple:
    """(q_max, p_max) for the alpha family: membership in the q-energy class
    holds iff q < (n-m)/alpha - m, and the density is L^p iff
    p < n / (m (alpha+1))."""
    if not (0 < alpha < (n - m) / m):
        raise ValueError("not m-subharmonic: alpha outside (0, (n-m)/m)")
    return (n - m) / alpha - m, n / (m * (alpha + 1.0))


def sharp_exponent(p: float, n: int, m: int) -> float:
    """q(p) = n m (p-1) / (n - m p) for densities in L^p, 1 < p < n/m."""
    if not (1.0 < p < n / m):
        raise ValueError("hypothesis violated: need 1 < p < n/m")
    return n * m * (p - 1.0) / (n - m * p)


def radial_sigma_m(chi1, chi2, t, n: int, m: int):
    """sigma_m of the radial eigenvalue pattern (chi' x (n-1), chi' + t chi'')."""
    return chi1 ** (m - 1) * (comb(n, m) * chi1 + comb(n - 1, m - 1) * t * chi2)


def radial_hessian_density(p: RadialProfile, s) -> float | np.ndarray:
    """Hessian-measure density (w.r.t. Lebesgue volume) at radius s.

    The density is evaluated on the sample grid and interpolated in log t,
    so profiles with identically vanishing density report exact zeros.
    """
    s_arr = np.asarray(s, dtype=float)
    if np.any((s_arr <= 0) | (s_arr >= p.R)):
        raise ValueError("radius must lie in (0, R)")
    dens = density_samples(p)
    pos = p.t > 0
    out = np.interp(np.log(s_arr**2), np.log(p.t[pos]), dens[pos])
    return float(out) if np.isscalar(s) else out


def density_samples(p: RadialProfile) -> np.ndarray:
    return p.c_nm * radial_sigma_m(p.chi1, p.chi2, p.t, p.n, p.m)


def kink_masses(p: RadialProfile) -> list:
    """Surface masses carried by chi' jumps, from the conservative form:
    jump of c Kvol (binom(n,m)/n) t^n (chi')^m across each kink.

    One-sided SAMPLE values are used (the sample at the kink carries the
    right branch by construction; interpolating arbitrarily close to the
    kink would still straddle it)."""
    out = []
    pref = p.c_nm * volume_factor(p.n) * comb(p.n, p.m) / p.n
    for tk in p.kinks:
        i = int(np.searchsorted(p.t, tk * (1 - 1e-12)))
        i = min(max(i, 1), len(p.t) - 1)
        left = p.chi1[i - 1]
        right = p.chi1[i] if p.t[i] >= tk * (1 - 1e-12) else p.chi1[min(i + 1, len(p.t) - 1)]
        jump = pref * tk**p.n * (right**p.m - left**p.m)
        out.append((math.sqrt(tk), float(jump)))
    return out


def shell_mass_conservative(p: RadialProfile, s0: float, s1: float) -> float:
    """Exact shell mass over s0 < |z| < s1 via the conservative form,
    including kink surface masses inside the shell. Independent oracle for
    the blended quadrature."""
    t0, t1 = s0 * s0, s1 * s1
    pref = p.c_nm * volume_factor(p.n) * comb(p.n, p.m) / p.n
    f1 = np.interp(t1, p.t, p.chi1)
    f0 = np.interp(t0, p.t, p.chi1) if t0 > 0 else 0.0
    base = pref * (t1**p.n * f1**p.m - t0**p.n * f0**p.m)
    return float(base)


# ---------------------------------------------------------------------------
# blended quadrature with epsilon-extrapolation
# ---------------------------------------------------------------------------

def _quintic_coeffs(ta, tb, va, d1a, d2a, vb, d1b, d2b):
    """Quintic on [ta, tb] matching value/slope/curvature at both ends."""
    L = tb - ta
    A = np.zeros((6, 6))
    rhs = np.zeros(6)
    for i, (x, v, d1, d2) in enumerate([(0.0, va, d1a * L, d2a * L * L),
                                        (1.0, vb, d1b * L, d2b * L * L)]):
        A[3 * i] = [x**k for k in range(6)]
        A[3 * i + 1] = [k * x ** (k - 1) if k else 0.0 for k in range(6)]
        A[3 * i + 2] = [k * (k - 1) * x ** (k - 2) if k >= 2 else 0.0 for k in range(6)]
        rhs[3 * i:3 * i + 3] = (v, d1, d2)
    return np.linalg.solve(A, rhs), L


def _blend_widths(p: RadialProfile, eps: float) -> list:
    """Per-kink base half-widths: clipped to stay inside (0, R) and pairwise
    disjoint, floored at a few local grid spacings (window ends inside the
    one-sample smear of a jump would feed the blend garbage end data)."""
    sks = sorted(math.sqrt(tk) for tk in p.kinks)
    out = []
    for j, sk in enumerate(sks):
        e = min(eps, 0.25 * sk, 0.25 * (p.R - sk))
        if j > 0:
            e = min(e, 0.3 * (sk - sks[j - 1]))
        if j + 1 < len(sks):
            e = min(e, 0.3 * (sks[j + 1] - sk))
        i = int(np.clip(np.searchsorted(p.t, sk * sk), 1, len(p.t) - 2))
        dt_loc = max(p.t[i + 1] - p.t[i], p.t[i] - p.t[i - 1])
        floor = 4.0 * dt_loc / (2.0 * sk)
        if e <= 0:
            raise MassNotConvergedError(f"no room to blend kink at s={sk}")
        out.append((sk * sk, e, floor))
    return out


def _blended_columns(p: RadialProfile, eps: float, rung: float = 1.0):
    """Sample columns with each kink replaced by a C^2 quintic blend over
    the window [ (sqrt(tk)-eps_k)^2, (sqrt(tk)+eps_k)^2 ]; per-kink widths
    scale with ``rung`` down to the local resolution floor."""
    t, chi, chi1, chi2 = p.t, p.chi, p.chi1, p.chi2
    for (tk, e_base, floor) in _blend_widths(p, eps):
        sk = math.sqrt(tk)
        eps_k = max(e_base * rung, min(floor, 0.25 * sk, 0.25 * (p.R - sk)))
        ta, tb = (sk - eps_k) ** 2, (sk + eps_k) ** 2
        va, d1a, d2a = (np.interp(ta, t, chi), np.interp(ta, t, chi1),
                        np.interp(ta, t, chi2))
        vb, d1b, d2b = (np.interp(tb, t, chi), np.interp(tb, t, chi1),
                        np.interp(tb, t, chi2))
        coef, L = _quintic_coeffs(ta, tb, va, d1a, d2a, vb, d1b, d2b)
        tw = np.geomspace(ta, tb, 3001)  # resolves steep power-law factors
        x = (tw - ta) / L
        q = sum(coef[k] * x**k for k in range(6))
        dq = sum(k * coef[k] * x ** (k - 1) for k in range(1, 6)) / L
        d2q = sum(k * (k - 1) * coef[k] * x ** (k - 2) for k in range(2, 6)) / L**2
        keep = (t < ta) | (t > tb)
        t_new = np.concatenate([t[keep], tw])
        order = np.argsort(t_new)
        chi = np.concatenate([chi[keep], q])[order]
        chi1 = np.concatenate([chi1[keep], dq])[order]
        chi2 = np.concatenate([chi2[keep], d2q])[order]
        t = t_new[order]
    return t, chi, chi1, chi2


def richardson_eps(val_fn, rungs=(1.0, 0.5, 0.25)) -> float:
    """Evaluate val_fn at blend-width scales 1, 1/2, 1/4 and extrapolate the
    width to zero; scale-independent values (to quadrature noise) pass
    through."""
    vals = [val_fn(r) for r in rungs]
    d1 = vals[1] - vals[0]
    d2 = vals[2] - vals[1]
    scale = abs(vals[2]) + 1e-300
    if abs(d1) < 1e-4 * scale and abs(d2) < 1e-4 * scale:
        return vals[2]
    if abs(d2) >= 0.8 * abs(d1):
        raise MassNotConvergedError(
            f"mass did not converge: increments {d1:.3e}, {d2:.3e}")
    return vals[2] + d2 / (d1 / d2 - 1.0)


def _weighted_quadrature(p: RadialProfile, p_exp: float, eps: float,
                         rung: float = 1.0) -> float:
    t, chi, chi1, chi2 = (_blended_columns(p, eps, rung) if p.kinks
                          else (p.t, p.chi, p.chi1, p.chi2))
    dens = p.c_nm * radial_sigma_m(chi1, chi2, t, p.n, p.m)
    w = np.power(np.maximum(-chi, 0.0), p_exp) if p_exp != 0 else 1.0
    g = w * dens * volume_factor(p.n) * t ** (p.n - 1)
    return float(np.trapezoid(g, t))


def _detect_divergence(p: RadialProfile, p_exp: float) -> bool:
    """Nested-cutoff classifier: quadrature increments across t0, t0/4,
    t0/16 growing with ratio > 1.5 flag a divergent inner integral."""
    pos = p.t > 0
    t, chi, chi1, chi2 = p.t[pos], p.chi[pos], p.chi1[pos], p.chi2[pos]
    if t[0] > p.R**2 * 1e-8:
        return False  # integrand resolved from a safely positive cutoff
    dens = p.c_nm * radial_sigma_m(chi1, chi2, t, p.n, p.m)
    w = np.power(np.maximum(-chi, 0.0), p_exp) if p_exp != 0 else np.ones_like(t)
    g = w * dens * volume_factor(p.n) * t ** (p.n - 1)
    t0 = t[0] * 64.0
    cuts = [t0, t0 / 4.0, t0 / 16.0]
    tails = []
    for c in cuts:
        sel = t >= c
        tails.append(float(np.trapezoid(g[sel], t[sel])))
    inc1 = tails[1] - tails[0]
    inc2 = tails[2] - tails[1]
    scale = abs(tails[0]) + 1e-300
    if inc2 <= 1e-9 * scale:
        return False
    return inc2 > DIVERGENCE_RATIO * inc1 > 0


def radial_total_mass(p: RadialProfile, eps: float = 0.05) -> float:
    """Total Hessian mass of a radial profile.

    Kinks are replaced by C^2 quintic blends of half-width eps, integrated
    with the exact spherical-shell volume element, and Richardson-
    extrapolated over eps, eps/2, eps/4.
    """
    return radial_energy(p, 0.0, eps=eps)


def radial_energy(p: RadialProfile, p_exp: float, eps: float = 0.05) -> float:
    """p-energy int (-u)^p H_m(u) by blended radial quadrature.

    Returns math.inf when the near-origin integrand diverges (flag, not an
    error); raises MassNotConvergedError when the eps-extrapolation ratio
    test fails.
    """
    if p_exp < 0:
        raise ValueError("exponent must be nonnegative")
    if not p.bounded and p_exp > 0:
        qmax = (p.n - p.m) / p.alpha - p.m if p.alpha else None
        if _detect_divergence(p, p_exp):
            return math.inf
        if qmax is not None and p_exp >= qmax - 1e-12:
            return math.inf  # borderline power: log-divergent
    elif _detect_divergence(p, p_exp):
        return math.inf
    if not p.kinks:
        return _weighted_quadrature(p, p_exp, eps)
    return richardson_eps(lambda r: _weighted_quadrature(p, p_exp, eps, r))


def shell_mass_quadrature(p: RadialProfile, s0: float, s1: float,
                          eps: float = 0.02) -> float:
    """Blended quadrature of the density over a shell (for tests against
    :func:`shell_mass_conservative`)."""
    t, chi, chi1, chi2 = (_blended_columns(p, eps) if p.kinks
                          else (p.t, p.chi, p.chi1, p.chi2))
    sel = (t >= s0 * s0) & (t <= s1 * s1)
    dens = p.c_nm * radial_sigma_m(chi1[sel], chi2[sel], t[sel], p.n, p.m)
    g = dens * volume_factor(p.n) * t[sel] ** (p.n - 1)
    return float(np.trapezoid(g, t[sel]))


def is_radially_m_subharmonic(p: RadialProfile, rtol: float = 1e-9) -> bool:
    """chi' >= 0 and the sigma_m bracket >= 0 on the sample grid.

    Samples straddling a kink are skipped: the jump carries nonnegative
    surface measure there and the interpolated pointwise bracket mixes the
    two branches meaninglessly."""
    ok = np.ones_like(p.t, dtype=bool)
    for tk in p.kinks:
        i = int(np.searchsorted(p.t, tk))
        ok[max(i - 2, 0):i + 3] = False
    bracket = comb(p.n, p.m) * p.chi1 + comb(p.n - 1, p.m - 1) * p.t * p.chi2
    scale = np.max(np.abs(p.chi1)) + 1e-300
    bscale = np.max(np.abs(bracket[ok])) + 1e-300
    return bool(np.all(p.chi1[ok] >= -rtol * scale)
                and np.all(bracket[ok] >= -rtol * bscale))


# ---------------------------------------------------------------------------
# radial measures (for the radial solver backend)
# ---------------------------------------------------------------------------

@dataclass
class RadialMeasure:
    """Radial positive measure: density f(t) w.r.t. Lebesgue volume sampled
    on a t-grid, plus optional spherical surface masses (radius, mass)."""

    n: int
    R: float
    t: np.ndarray
    f: np.ndarray
    surface: list = field(default_factory=list)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.f = np.asarray(self.f, dtype=float)
        if np.any(self.f < -1e-12 * (np.max(np.abs(self.f)) + 1e-300)):
            raise ValueError("radial measure density must be nonnegative")
        if any(r <= 0 or mass < 0 for r, mass in self.surface):
            raise ValueError("surface masses need radius > 0 and mass >= 0")

    def cumulative(self) -> np.ndarray:
        """M(t) = mu(B(sqrt(t))) on the sample grid. Surface radii are
        matched with a relative slack (sqrt/square round trips move them by
        an ulp)."""
        g = self.f * volume_factor(self.n) * self.t ** (self.n - 1)
        M = np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1])
                                             * np.diff(self.t))])
        for (rad, mass) in self.surface:
            M = M + np.where(self.t >= rad * rad * (1 - 1e-9), mass, 0.0)
        return M

    def total(self) -> float:
        return float(self.cumulative()[-1])


def measure_of_profile(p: RadialProfile) -> RadialMeasure:
    """H_m(u) of a radial profile as density samples plus exact kink surface
    masses (conservative form)."""
    dens = density_samples(p)
    for tk in p.kinks:  # zero the two samples bracketing each kink
        i = np.searchsorted(p.t, tk)
        dens[max(i - 1, 0):i + 1] = np.interp(
            tk * (1 + 1e-6), p.t, density_samples(p))
    return RadialMeasure(n=p.n, R=p.R, t=p.t.copy(), f=np.maximum(dens, 0.0),
                         surface=kink_masses(p))


def sample_to_grid(p: RadialProfile, domain: GridDomain) -> GridFunction:
    """Evaluate a bounded radial profile on a full grid (zero outside the
    ball)."""
    if not p.bounded:
        raise ValueError("cannot sample an unbounded profile on a grid; "
                         "cap or smooth it first")
    if domain.R > p.R * (1 + 1e-12):
        raise ValueError("profile not defined out to the domain radius")
    vals = np.interp(domain.radius_sq, p.t, p.chi, left=p.chi[0], right=0.0)
    vals = np.where(domain.interior, np.minimum(vals, 0.0), 0.0)
    return GridFunction(domain, vals)
