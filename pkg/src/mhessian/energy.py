"""Finite-energy functionals and the inequality suite.

E_p(u) = int (-u)^p H_m(u), mutual energies against polarized mixed Hessian
measures, the generalized Hoelder inequality with explicit constants, the
variational functional F_mu(u) = E(u)/(m+1) + int u dmu, and the
capacity-energy bounds. Grid and radial backends share the same reporting
types; every check returns an EnergyReport whose margin may be negative
(a violation is a test failure, not a crash).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .calculus import (complex_hessian, grid_quadrature,
                       hessian_measure_smooth, mixed_measure)
from .grid import GridDomain, GridFunction, MeasureDensity
from .radial import (RadialMeasure, RadialProfile, cap_of_ball_formula,
                     combine_profiles, radial_energy, radial_sigma_m,
                     shell_mass_conservative, volume_factor)


@dataclass
class EnergyReport:
    lhs: float
    rhs: float
    constant_used: float
    margin: float
    witness: str
    extras: dict = dc_field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.margin >= 0.0


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------

def energy_Ep(u, p: float, eps: float = 0.05) -> float:
    """p-energy int (-u)^p H_m(u); E_0 is the total Hessian mass."""
    if p < 0:
        raise ValueError("p must be nonnegative")
    if isinstance(u, RadialProfile):
        return radial_energy(u, p, eps=eps)
    return _grid_energy(u, p)


def energy_E(u, eps: float = 0.05) -> float:
    return energy_Ep(u, 1.0, eps=eps)


def _grid_energy(u: GridFunction, p: float) -> float:
    dom = u.domain
    dens = hessian_measure_smooth(u, check=False, boundary="zero_extension")
    if p == 0:
        sel = dens.clean if dens.clean is not None else dom.interior
        return grid_quadrature(dom, np.where(sel, dens.density, 0.0))
    w = np.power(np.maximum(-u.values, 0.0), p)
    return grid_quadrature(dom, dens.density, w)


def mutual_energy(u, weights, p: float, eps: float = 0.05) -> float:
    """int (-u)^p dd^c v_1 ^ ... ^ dd^c v_m ^ beta^{n-m} with the polarized
    mixed sigma_m density. ``weights`` supplies exactly m potentials."""
    if isinstance(u, RadialProfile):
        return _radial_mutual(u, list(weights), p)
    dom = u.domain
    weights = list(weights)
    if len(weights) != dom.m:
        raise ValueError(f"need m={dom.m} weight potentials")
    if any(v.domain.shape != dom.shape for v in weights):
        raise ValueError("dimension mismatch between potentials")
    fields = [complex_hessian(v, boundary="zero_extension") for v in weights]
    dens = mixed_measure(fields, dom.m, dom)
    w = np.power(np.maximum(-u.values, 0.0), p)
    return grid_quadrature(dom, dens.density, w)


def _radial_mutual(u: RadialProfile, weights, p: float,
                   eps: float = 0.05) -> float:
    """Mixed energy for radial profiles. Kinks in the weight slots carry
    surface measure, so all kinked columns are quintic-blended and the blend
    width extrapolated to zero (the same ladder as the plain energies; plain
    trapezoids would drop the surface masses)."""
    from itertools import combinations
    from .radial import _blended_columns, richardson_eps
    m, n = u.m, u.n
    if len(weights) != m:
        raise ValueError(f"need m={m} weight potentials")

    def value(rung: float) -> float:
        cols = []
        for v in weights:
            if v.kinks:
                cols.append(_blended_columns(v, eps, rung))
            else:
                cols.append((v.t, v.chi, v.chi1, v.chi2))
        ucol = (_blended_columns(u, eps, rung) if u.kinks
                else (u.t, u.chi, u.chi1, u.chi2))
        t = np.unique(np.concatenate([c[0] for c in cols] + [ucol[0]]))
        uchi = np.interp(t, ucol[0], ucol[1])
        X = [np.interp(t, c[0], c[2]) for c in cols]
        Y = [np.interp(t, c[0], c[3]) for c in cols]
        acc = np.zeros_like(t)
        for size in range(1, m + 1):
            sign = (-1) ** (m - size)
            for sub in combinations(range(m), size):
                xs = sum(X[i] for i in sub)
                ys = sum(Y[i] for i in sub)
                acc += sign * radial_sigma_m(xs, ys, t, n, m)
        dens = u.c_nm * acc / math.factorial(m)
        w = np.power(np.maximum(-uchi, 0.0), p) if p != 0 else 1.0
        g = w * dens * volume_factor(n) * t ** (n - 1)
        return float(np.trapezoid(g, t))

    if not any(v.kinks for v in [u] + weights):
        return value(1.0)
    return richardson_eps(value)


# ---------------------------------------------------------------------------
# the Hoelder suite
# ---------------------------------------------------------------------------

def holder_constant(p: float, m: int) -> float:
    """Constant D_p in the generalized Hoelder inequality.

    D_1 = 1. For p > 1 the single interpolation step gives p^{p/(p-1)} when
    m = 1; for m >= 2 the iterated constant is p^{p alpha(p,m)/(p-1)} with
    alpha(p,m) = (p+2)((p+1)/p)^{m-2} - p - 1. (The m >= 2 exponent formula
    evaluated at m = 1 would drop below 1 and falsify the diagonal case, so
    the one-step constant is used there.)
    """
    if p < 1:
        raise ValueError("use low_exponent_check for p < 1")
    if p == 1:
        return 1.0
    if m == 1:
        alpha = 1.0
    else:
        alpha = (p + 2.0) * ((p + 1.0) / p) ** (m - 2) - p - 1.0
    return p ** (p * alpha / (p - 1.0))


def holder_energy_check(u, weights, p: float, eps: float = 0.05) -> EnergyReport:
    """Check int (-u)^p dd^c v_1 ... dd^c v_m beta^{n-m}
    <= D_p E_p(u)^{p/(m+p)} prod E_p(v_i)^{1/(m+p)}."""
    weights = list(weights)
    m = u.m if isinstance(u, RadialProfile) else u.domain.m
    if p < 1:
        raise ValueError("use low-exponent bound")
    Dp = holder_constant(p, m)
    lhs = mutual_energy(u, weights, p, eps=eps)
    Eu = energy_Ep(u, p, eps=eps)
    Evs = [energy_Ep(v, p, eps=eps) for v in weights]
    rhs = Dp * Eu ** (p / (m + p))
    for Ev in Evs:
        rhs *= Ev ** (1.0 / (m + p))
    return EnergyReport(lhs=lhs, rhs=rhs, constant_used=Dp, margin=rhs - lhs,
                        witness=f"holder p={p:g} m={m} E_p(u)={Eu:.6g}",
                        extras={"E_p": [Eu] + Evs})


def low_exponent_check(u, v, p: float, k: int, T=(), eps: float = 0.05) -> EnergyReport:
    """Check int (-u)^p (dd^c v)^k ^ T <= 2 int (-u)^p (dd^c u)^k ^ T
    + 2 int (-v)^p (dd^c v)^k ^ T for 0 < p < 1, T a wedge of m-k further
    Hessians (and beta^{n-m}). Also reports the empirical ratio of the
    left side to max E_p (whose sharp constant is not explicit)."""
    if not (0.0 < p < 1.0):
        raise ValueError("exponent must lie in (0, 1)")
    m = u.m if isinstance(u, RadialProfile) else u.domain.m
    T = list(T)
    if k < 1 or k + len(T) != m:
        raise ValueError(f"need k >= 1 and k + len(T) = m = {m}")
    lhs = mutual_energy(u, [v] * k + T, p, eps=eps)
    rhs = (2.0 * mutual_energy(u, [u] * k + T, p, eps=eps)
           + 2.0 * mutual_energy(v, [v] * k + T, p, eps=eps))
    energies = [energy_Ep(w, p, eps=eps) for w in [u, v] + T]
    ratio = lhs / max(energies) if max(energies) > 0 else math.inf
    return EnergyReport(lhs=lhs, rhs=rhs, constant_used=2.0, margin=rhs - lhs,
                        witness=f"low-exponent p={p:g} k={k} m={m}",
                        extras={"ratio_vs_max_Ep": ratio})


# ---------------------------------------------------------------------------
# the variational functional
# ---------------------------------------------------------------------------

def functional_L(u, mu) -> float:
    """L_mu(u) = int u dmu (u <= 0, so L <= 0 for positive measures)."""
    if isinstance(u, RadialProfile):
        if not isinstance(mu, RadialMeasure):
            raise ValueError("radial potential needs a radial measure")
        chi = np.interp(mu.t, u.t, u.chi)
        g = chi * mu.f * volume_factor(mu.n) * mu.t ** (mu.n - 1)
        total = float(np.trapezoid(g, mu.t))
        for (rad, mass) in mu.surface:
            total += float(np.interp(rad * rad, u.t, u.chi)) * mass
        return total
    dom = u.domain
    if isinstance(mu, MeasureDensity):
        from .calculus import integrate
        return integrate(mu, u)
    raise ValueError("unsupported measure type")


def functional_F(u, mu, eps: float = 0.05) -> float:
    """F_mu(u) = E(u)/(m+1) + L_mu(u); minimized exactly by solutions of
    H_m(u) = mu."""
    m = u.m if isinstance(u, RadialProfile) else u.domain.m
    return energy_E(u, eps=eps) / (m + 1.0) + functional_L(u, mu)


# ---------------------------------------------------------------------------
# capacity-energy bounds
# ---------------------------------------------------------------------------

def capacity_energy_bound(U, phi, p: float, eps_exp: float | None = None,
                          capacity: float | None = None,
                          mass_on_U: float | None = None) -> EnergyReport:
    """Mass of H_m(phi) on an open set U against the capacity-energy bounds:

    p >= 1:    int_U H_m(phi) <= Cap_m(U)^{p/(p+m)} E_p(phi)^{m/(p+m)}
    0 < p < 1: int_U H_m(phi) <= 2 Cap_m(U)^{1-m eps} + 2 Cap_m(U)^{p eps} E_p(phi)

    Radial fast path: U a centered ball (radius, given as float) with phi a
    RadialProfile uses closed forms; otherwise U is a grid mask/GridSet and
    capacity is computed by the envelope module unless supplied.
    """
    if isinstance(phi, RadialProfile):
        if not isinstance(U, (int, float)):
            raise ValueError("radial path expects U as a ball radius")
        rho = float(U)
        if not (0 < rho < phi.R):
            raise ValueError("ball radius must lie in (0, R)")
        lhs = shell_mass_conservative(phi, 0.0, rho)
        cap = (cap_of_ball_formula(rho, phi.R, phi.n, phi.m)
               if capacity is None else capacity)
        m = phi.m
        Ep = radial_energy(phi, p)
    else:
        dom = phi.domain
        m = dom.m
        if mass_on_U is None or capacity is None:
            from .envelope import GridSet, relative_extremal
            mask = U.mask(dom) if isinstance(U, GridSet) else np.asarray(U, bool)
            if capacity is None:
                capacity = relative_extremal(U if isinstance(U, GridSet) else mask,
                                             dom).value
            if mass_on_U is None:
                dens = hessian_measure_smooth(phi, check=False,
                                              boundary="zero_extension")
                sel = mask & (dens.clean if dens.clean is not None else dom.interior)
                mass_on_U = grid_quadrature(dom, np.where(sel, dens.density, 0.0))
        lhs, cap = mass_on_U, capacity
        Ep = energy_Ep(phi, p)
    if p >= 1:
        rhs = cap ** (p / (p + m)) * Ep ** (m / (p + m))
        const = 1.0
        witness = f"capacity-energy p={p:g} (p>=1)"
    else:
        if eps_exp is None:
            eps_exp = 0.5 / m
        if not (0 < eps_exp < 1.0 / m):
            raise ValueError("need eps in (0, 1/m)")
        rhs = 2.0 * cap ** (1 - m * eps_exp) + 2.0 * cap ** (p * eps_exp) * Ep
        const = 2.0
        witness = f"capacity-energy p={p:g} eps={eps_exp:g} (p<1)"
    return EnergyReport(lhs=lhs, rhs=rhs, constant_used=const,
                        margin=rhs - lhs, witness=witness,
                        extras={"capacity": cap, "E_p": Ep})


def sublevel_capacity_check(phi, p: float, t: float,
                            domain: GridDomain | None = None) -> EnergyReport:
    """Cap_m({phi < -t}) <= 2^{m+p} E_p(phi) / t^{m+p}.

    The constant is the doubling constant traced from
    Cap_m(phi < -2t) <= E_p(phi)/t^{m+p}; the lemma itself asserts only some
    C depending on m. The empirical best constant is reported alongside.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if isinstance(phi, RadialProfile):
        chi_min = float(phi.chi[0])
        if -t <= chi_min:  # sublevel set is empty
            lhs = 0.0
            s_t = 0.0
        else:
            t_s = float(np.interp(-t, phi.chi, phi.t))
            s_t = math.sqrt(t_s)
            lhs = cap_of_ball_formula(s_t, phi.R, phi.n, phi.m)
        m = phi.m
        Ep = radial_energy(phi, p)
    else:
        dom = phi.domain
        m = dom.m
        mask = dom.interior & (phi.values < -t)
        if not mask.any():
            lhs = 0.0
        else:
            from .envelope import relative_extremal
            lhs = relative_extremal(mask, dom).value
        Ep = energy_Ep(phi, p)
        s_t = math.nan
    const = 2.0 ** (m + p)
    rhs = const * Ep / t ** (m + p)
    best = lhs * t ** (m + p) / Ep if Ep > 0 else 0.0
    return EnergyReport(lhs=lhs, rhs=rhs, constant_used=const,
                        margin=rhs - lhs,
                        witness=f"sublevel t={t:g} p={p:g}",
                        extras={"sublevel_radius": s_t,
                                "empirical_constant": best})
