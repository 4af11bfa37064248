"""Solvers for the degenerate equation H_m(u) = mu and the variational,
comparison and maximum-principle harnesses.

Grid backend: nonlinear red-black SOR. At each point the center value is the
root of c sigma_m(lambda(H(x))) = f(x) inside the positivity cone with
neighbours frozen (closed form on n = 2 grids), which coincides with the
largest center value keeping sigma_m >= f/c and sigma_j >= 0 for j < m.
Coarse-to-fine cascade with a mass-matched Poisson initialization pushed
into the cone by the envelope projection.

Radial backend: the conservative form turns H_m(u) = mu into an exact
first-order relation: with M(s) = mu(B(s)),

    chi'(t) = [ n! M(sqrt(t)) / (pi^n c(n,m) binom(n,m) t^n) ]^{1/m},

integrated inward from chi(R^2) = 0.

Variational backend: projected descent of F_mu(u) = E(u)/(m+1) + int u dmu;
the correction direction solves the sigma_1 (Poisson) equation with the
density residual as right-hand side, the step is envelope-projected, and
the step size backtracks on F_mu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .calculus import StencilGeometry, grid_quadrature
from .energy import energy_E, functional_F, functional_L
from .envelope import (GridSet, ObstacleProblem, _SweepKernel, envelope_geometry,
                       measure_with_geometry, msh_envelope)
from .grid import GridDomain, GridFunction, MeasureDensity, norm_constant
from .radial import (RadialMeasure, RadialProfile, density_samples,
                     kink_masses, volume_factor)


@dataclass
class SolveConfig:
    backend: str = "grid-relaxation"  # radial | grid-relaxation | variational-descent
    tolerance: float = 1e-6           # max residual, density units
    max_iterations: int = 60000
    omega: float | None = None
    initial_step: float = 1.0
    backtrack: float = 0.5
    cascade: bool = True

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if not (0 < self.backtrack < 1):
            raise ValueError("backtracking factor must lie in (0,1)")
        if self.initial_step <= 0:
            raise ValueError("initial step must be positive")
        if self.backend not in ("radial", "grid-relaxation", "variational-descent"):
            raise ValueError(f"unknown backend {self.backend!r}")


@dataclass
class SolveResult:
    solution: object                  # GridFunction or RadialProfile
    residual: float
    F_value: float
    iterations: int
    converged: bool
    mass_mismatch: float = 0.0
    uncertainty: float = math.nan
    history: list = field(default_factory=list)  # (iteration, residual, F)


def solve(mu, domain, config: SolveConfig) -> SolveResult:
    if config.backend == "radial":
        return solve_radial(mu, domain, config)
    if config.backend == "grid-relaxation":
        return solve_grid(mu, domain, config)
    return solve_variational(mu, domain, config)


# ---------------------------------------------------------------------------
# radial backend
# ---------------------------------------------------------------------------

def solve_radial(mu: RadialMeasure, dom, config: SolveConfig | None = None) -> SolveResult:
    """Quadrature inversion of the radial Hessian relation.

    ``dom`` is the pair (n, m); the measure supplies the domain radius. The
    residual re-applies the radial density formula away from surface radii
    and is RELATIVE (singular admissible densities make absolute sup norms
    meaningless); the surface-mass mismatch is reported separately.
    """
    n, m = dom
    config = config or SolveConfig(backend="radial")
    if np.any(mu.f < 0):
        raise ValueError("radial density must be nonnegative")
    M = mu.cumulative()
    if not np.isfinite(M[-1]):
        raise ValueError("infinite mass")
    t = mu.t
    # near-origin completion: the sampled cumulative misses the mass below
    # the first sample; complete it from the local power-law exponent of the
    # density (and detect non-integrable densities, f ~ t^{-beta}, beta >= n)
    pos = np.flatnonzero((t > 0) & (mu.f > 0))
    strictly_pos = t[t > 0]
    if (pos.size >= 10 and strictly_pos.size
            and t[pos[0]] <= strictly_pos[0] * 256):
        # density reaches the inner end of the grid: singular-at-origin case
        i0, i1 = pos[0], pos[min(8, pos.size - 1)]
        if t[i1] > t[i0]:
            beta = -math.log(mu.f[i1] / mu.f[i0]) / math.log(t[i1] / t[i0])
            if beta >= n - 1e-9:
                raise ValueError("infinite mass")
            if beta > -10:  # local power-law fit is meaningful
                tail = (mu.f[i0] * volume_factor(n) * t[i0] ** n
                        / (n - beta))
                M = M + tail
    c = norm_constant(n, m)
    pref = math.factorial(n) / (math.pi**n * c * math.comb(n, m))
    with np.errstate(divide="ignore", invalid="ignore"):
        chi1 = np.where(t > 0, (pref * np.maximum(M, 0.0)
                                / np.maximum(t, 1e-300) ** n) ** (1.0 / m), 0.0)
    chi1 = np.where(np.isfinite(chi1), chi1, 0.0)
    # chi(t) = -int_t^{R^2} chi'
    seg = 0.5 * (chi1[1:] + chi1[:-1]) * np.diff(t)
    chi = -np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    chi2 = np.gradient(chi1, t, edge_order=1)
    kinks = []
    for (r, _) in mu.surface:  # snap to the sample carrying the jump
        i = int(np.searchsorted(t, r * r * (1 - 1e-9)))
        kinks.append(float(t[min(i, len(t) - 1)]))
    kinks = tuple(kinks)
    prof = RadialProfile(n=n, m=m, R=mu.R, t=t.copy(), chi=chi, chi1=chi1,
                         chi2=chi2, kinks=kinks,
                         bounded=bool(np.isfinite(chi[0])),
                         label="radial-solve")
    dens = density_samples(prof)
    away = np.ones_like(t, dtype=bool)
    for (r, _) in mu.surface:
        away &= np.abs(t - r * r) > 4 * (t * 2e-3 + 1e-12)
    away &= t > t[max(0, len(t) // 200)]
    away &= t < t[-1] * (1 - 1e-4)  # one-sided gradient edge
    from .grid import ball_volume
    scale = max(float(np.max(mu.f)), mu.total() / ball_volume(n, mu.R), 1e-300)
    # relative residual: singular densities make absolute sups meaningless
    with np.errstate(invalid="ignore"):
        rel = np.abs(dens - mu.f) / (scale + np.abs(mu.f))
    residual = float(np.max(rel[away])) if away.any() else 0.0
    mass_mm = 0.0
    if mu.surface:
        jumps = kink_masses(prof)
        for (r, mass) in mu.surface:
            got = sum(jm for (rj, jm) in jumps if abs(rj - r) <= 1e-6 * mu.R)
            mass_mm = max(mass_mm, abs(got - mass))
    F = functional_F(prof, mu) if prof.bounded else math.nan
    return SolveResult(solution=prof, residual=residual, F_value=F,
                       iterations=1,
                       converged=residual <= max(1e-3, config.tolerance),
                       mass_mismatch=mass_mm)


# ---------------------------------------------------------------------------
# grid backend
# ---------------------------------------------------------------------------

def _coarse_ladder(P: int):
    out = [P]
    while P % 4 == 1 and (P - 1) // 2 + 1 >= 9:
        P = (P - 1) // 2 + 1
        out.append(P)
    return out[::-1]


def _prolong(values: np.ndarray) -> np.ndarray:
    """Linear interpolation from P to 2P-1 points along every axis."""
    u = values
    for d in range(u.ndim):
        u = np.moveaxis(u, d, 0)
        P = u.shape[0]
        new = np.zeros((2 * P - 1,) + u.shape[1:])
        new[0::2] = u
        new[1::2] = 0.5 * (u[:-1] + u[1:])
        u = np.moveaxis(new, 0, d)
    return u


def _density_on(dom: GridDomain, mu, fine_density: np.ndarray | None) -> np.ndarray:
    if callable(mu):
        f = np.asarray(mu(dom), dtype=float)
    elif isinstance(mu, MeasureDensity):
        f = mu.density
        if mu.surface:
            raise ValueError("grid backend supports absolutely continuous "
                             "measures only; use the radial backend")
    else:
        f = np.asarray(mu, dtype=float)
    if f.shape != dom.shape:
        if fine_density is not None:
            stride = (fine_density.shape[0] - 1) // (dom.points_per_axis - 1)
            sl = (slice(None, None, stride),) * f.ndim
            return np.where(dom.interior, fine_density[sl], 0.0)
        raise ValueError("measure density shape does not match domain")
    if not np.all(np.isfinite(f)) :
        raise ValueError("measure density must be finite (bounded density)")
    if np.min(f) < -1e-12 * max(np.max(np.abs(f)), 1.0):
        raise ValueError("measure density must be nonnegative")
    return np.where(dom.interior, f, 0.0)


def _auto_omega(P: int, m: int) -> float:
    w = 2.0 / (1.0 + math.sin(math.pi / (P - 1)))
    return min(w, 1.75) if m == 2 else w


def _poisson_like_solve(dom: GridDomain, geom: StencilGeometry,
                        target1: np.ndarray, tol: float, max_sweeps: int,
                        warm: np.ndarray | None = None,
                        clamp: bool = False) -> np.ndarray:
    """Signed sigma_1 (Poisson) solve by SOR: sigma_1(lambda(u)) = target1."""
    interior = geom.active
    red = ~dom.parity & interior
    black = dom.parity & interior
    omega = _auto_omega(dom.points_per_axis, 1)
    u = np.zeros(dom.shape) if warm is None else warm.copy()
    for _ in range(max_sweeps):
        delta = 0.0
        for mask in (red, black):
            NB1, g1 = geom.diag_parts(u, 0)
            NB2, g2 = geom.diag_parts(u, 1)
            ustar = (NB1 + NB2 - target1) / (g1 + g2)
            if clamp:
                ustar = np.minimum(ustar, 0.0)
            unew = u + omega * (ustar - u)
            if clamp:
                unew = np.minimum(unew, 0.0)
            unew = np.where(mask, unew, u)
            delta = max(delta, float(np.abs(unew - u)[mask].max()))
            u = unew
        if delta < tol:
            break
    return np.where(interior, u, 0.0)


def _initial_iterate(dom: GridDomain, geom: StencilGeometry, f: np.ndarray,
                     update_tol: float) -> np.ndarray:
    """Poisson solution with the same total mass, pushed into the cone by the
    envelope projection."""
    c1 = norm_constant(dom.n, 1)
    w = _poisson_like_solve(dom, geom, f / c1, update_tol, 4000, clamp=True)
    if dom.m == 1:
        return w
    obstacle = GridFunction(dom, np.where(dom.interior, np.minimum(w, 0.0), 0.0))
    prob = ObstacleProblem(dom, obstacle, tolerance=max(update_tol, 1e-9),
                           max_sweeps=4000)
    return msh_envelope(prob, geometry=geom).values


def _update_tol(dom: GridDomain, tolerance: float, f: np.ndarray) -> float:
    scale = 1.0
    if dom.m == 2:
        scale = max(math.sqrt(float(np.max(f)) / dom.c_nm), 1.0)
    return tolerance * dom.h**2 / (20.0 * dom.c_nm * scale)


def _solution_uncertainty(dom: GridDomain, residual: float, f: np.ndarray) -> float:
    """Poisson-style bound on the solution-unit effect of a density residual:
    |delta u| <~ residual R^2 / (4 c) for m = 1, scaled by the linearization
    m sigma_m^{(m-1)/m} for m = 2."""
    scale = 1.0
    if dom.m == 2:
        scale = max(dom.m * (float(np.max(f)) / dom.c_nm) ** 0.5, 1e-6)
    return residual * dom.R**2 / (4.0 * dom.c_nm * scale)


def solve_grid(mu, domain: GridDomain, config: SolveConfig | None = None) -> SolveResult:
    """Nonlinear relaxation solve of c sigma_m(lambda(u)) = f on an n = 2
    grid, zero boundary values. ``mu`` is a MeasureDensity, a density array,
    or a callable(domain) -> density (exact coarse-level data in cascades).
    """
    config = config or SolveConfig()
    fine = domain
    f_fine = _density_on(fine, mu, None)
    ladder = _coarse_ladder(fine.points_per_axis) if config.cascade else [fine.points_per_axis]
    u = None
    total_sweeps = 0
    history = []
    residual = math.inf
    geom_fine = None
    for P in ladder:
        dom = fine if P == fine.points_per_axis else GridDomain(
            n=fine.n, m=fine.m, R=fine.R, points_per_axis=P)
        geom = StencilGeometry.build(dom, outer=True)
        if P == fine.points_per_axis:
            geom_fine = geom
        f = f_fine if dom is fine else _density_on(dom, mu, f_fine)
        target = np.where(dom.interior, f / dom.c_nm, 0.0)
        utol = _update_tol(dom, config.tolerance, f)
        if u is None:
            u = _initial_iterate(dom, geom, f, utol)
        kern = _SweepKernel(dom, geom)
        interior = geom.active
        red = ~dom.parity & interior
        black = dom.parity & interior
        omega = config.omega or _auto_omega(P, dom.m)
        level_budget = config.max_iterations
        sweeps = 0
        best = math.inf
        stale = 0
        while sweeps < level_budget:
            sweeps += 1
            delta = 0.0
            mixed = kern.mixed_sq(u) if dom.m == 2 else None
            for mask in (red, black):
                ustar = np.minimum(0.0, kern.largest_admissible(u, target,
                                                                0.0, mixed))
                unew = np.minimum(u + omega * (ustar - u), 0.0)
                delta = max(delta, float(np.abs(unew - u)[mask].max()))
                u = np.where(mask, unew, u)
            if delta < utol:
                if dom is not fine:
                    break
                dens = measure_with_geometry(GridFunction(dom, u), geom).density
                residual = float(np.abs(dens - f)[interior].max())
                history.append((total_sweeps + sweeps, residual, math.nan))
                if residual <= config.tolerance:
                    break
                utol /= 5.0
            if delta < 0.8 * best:
                best, stale = delta, 0
            else:
                stale += 1
                if stale > 60 and omega > 1.0:  # anneal out of limit cycles
                    omega = max(1.0, 0.7 * omega)
                    stale = 0
        total_sweeps += sweeps
        if dom is not fine:
            u = _prolong(u)
    sol = GridFunction(fine, np.where(fine.interior, u, 0.0))
    dens = measure_with_geometry(sol, geom_fine).density
    residual = float(np.abs(dens - f_fine)[geom_fine.active].max())
    F = functional_F(sol, MeasureDensity(fine, f_fine))
    return SolveResult(solution=sol, residual=residual, F_value=F,
                       iterations=total_sweeps,
                       converged=residual <= config.tolerance,
                       uncertainty=_solution_uncertainty(fine, residual, f_fine),
                       history=history)


# ---------------------------------------------------------------------------
# variational backend
# ---------------------------------------------------------------------------

def solve_variational(mu, domain: GridDomain, config: SolveConfig | None = None,
                      psi_check: int = 0, rng=None) -> SolveResult:
    """Projected descent of F_mu: Riesz-type correction from a Poisson solve
    of the density residual, envelope projection, backtracking on F_mu."""
    config = config or SolveConfig(backend="variational-descent")
    dom = domain
    f = _density_on(dom, mu, None)
    mu_dens = MeasureDensity(dom, f)
    geom = StencilGeometry.build(dom, outer=True)
    utol = _update_tol(dom, config.tolerance, f)
    c1 = norm_constant(dom.n, 1)
    u = GridFunction(dom, _initial_iterate(dom, geom, f, utol))
    F = functional_F(u, mu_dens)
    history = [(0, math.inf, F)]
    converged = False
    residual = math.inf
    iterations = 0
    env_tol = max(utol, 1e-10)
    max_outer = min(200, config.max_iterations)
    for it in range(1, max_outer + 1):
        iterations = it
        dens = measure_with_geometry(u, geom).density
        rho = np.where(geom.active, f - dens, 0.0)
        residual = float(np.abs(rho).max())
        if residual <= config.tolerance:
            converged = True
            break
        r = _poisson_like_solve(dom, geom, -rho / c1, utol, 2000)
        # sign: sigma_1(r) = -rho/c1 < 0 where f > H_m(u): r dips negative
        # there after the sign flip below; descent direction for F_mu
        r = -r
        tau = config.initial_step
        accepted = False
        while tau > 1e-6 * config.initial_step:
            cand_obstacle = GridFunction(
                dom, np.where(dom.interior,
                              np.minimum(u.values + tau * r, 0.0), 0.0))
            prob = ObstacleProblem(dom, cand_obstacle, tolerance=env_tol,
                                   max_sweeps=20000)
            cand = msh_envelope(prob, warm_start=u, geometry=geom)
            Fc = functional_F(cand, mu_dens)
            if Fc < F - 1e-14 * abs(F):
                u, F = cand, Fc
                accepted = True
                break
            tau *= config.backtrack
        history.append((it, residual, F))
        if not accepted:
            break
    sol = GridFunction(dom, u.values)
    return SolveResult(solution=sol, residual=residual, F_value=F,
                       iterations=iterations, converged=converged,
                       uncertainty=_solution_uncertainty(dom, residual, f),
                       history=history)


# ---------------------------------------------------------------------------
# harnesses
# ---------------------------------------------------------------------------

@dataclass
class DerivativeReport:
    quotient_plus: float
    quotient_minus: float
    extrapolated: float
    reference: float
    rel_gap: float


def derivative_lemma_check(u: GridFunction, v: GridFunction,
                           deltas=(0.2, 0.1, 0.05),
                           env_tolerance: float = 1e-9) -> DerivativeReport:
    """First-variation identity of the energy through the projection:

        d/dt E(P(u + t v)) / (m+1) |_{t=0}  =  int (-v) H_m(u).

    (The energy telescopes into m+1 mixed terms, each converging to the
    right side; the homogeneity case v = u is the scaling identity
    E((1+t)u) = (1+t)^{m+1} E(u) and is routed to a separate test.)
    One-sided quotients at +/-delta over a geometric ladder, Richardson
    extrapolated in delta.
    """
    dom = u.domain
    geom = StencilGeometry.build(dom, outer=True)
    mu_u = measure_with_geometry(u, geom)
    from .calculus import integrate
    reference = integrate(mu_u, GridFunction(dom, -v.values))
    E0 = energy_E(u)
    mplus1 = dom.m + 1

    def E_proj(t: float) -> float:
        vals = np.where(dom.interior, np.minimum(u.values + t * v.values, 0.0), 0.0)
        prob = ObstacleProblem(dom, GridFunction(dom, vals),
                               tolerance=env_tolerance, max_sweeps=30000)
        return energy_E(msh_envelope(prob, warm_start=u, geometry=geom))

    qp, qm = [], []
    for d in deltas:
        qp.append((E_proj(+d) - E0) / d / mplus1)
        qm.append((E0 - E_proj(-d)) / d / mplus1)
    # Richardson in delta with ratio deltas[i]/deltas[i+1]
    def extrap(q):
        r = deltas[0] / deltas[1]
        return (r * q[1] - q[0]) / (r - 1.0)

    Dp, Dm = extrap(qp), extrap(qm)
    est = 0.5 * (Dp + Dm)
    gap = abs(est - reference) / max(abs(reference), 1e-300)
    return DerivativeReport(quotient_plus=Dp, quotient_minus=Dm,
                            extrapolated=est, reference=reference,
                            rel_gap=gap)


@dataclass
class ComparisonReport:
    cells: int
    mass_u_on_set: float
    mass_v_on_set: float
    margin: float
    total_margin: float = math.nan


def comparison_harness(u: GridFunction, v: GridFunction) -> ComparisonReport:
    """Masses over {u < v}: int_{u<v} H_m(v) <= int_{u<v} H_m(u); for
    globally ordered pairs also the total-mass comparison
    int H_m(u) >= int H_m(v) (u <= v)."""
    dom = u.domain
    geom = StencilGeometry.build(dom, outer=True)
    du = measure_with_geometry(u, geom)
    dv = measure_with_geometry(v, geom)
    scale = max(float(np.abs(u.values).max()), float(np.abs(v.values).max()), 1e-12)
    slack = 4 * dom.h**2 * scale * 1e-2 + 1e-12
    S = dom.interior & (u.values < v.values - slack) & geom.clean
    mu_mass = grid_quadrature(dom, np.where(S, du.density, 0.0))
    mv_mass = grid_quadrature(dom, np.where(S, dv.density, 0.0))
    rep = ComparisonReport(cells=int(S.sum()), mass_u_on_set=mu_mass,
                           mass_v_on_set=mv_mass, margin=mu_mass - mv_mass)
    if np.all(u.values <= v.values + slack):
        sel = geom.clean
        tu = grid_quadrature(dom, np.where(sel, du.density, 0.0))
        tv = grid_quadrature(dom, np.where(sel, dv.density, 0.0))
        rep.total_margin = tu - tv
    return rep


@dataclass
class MaxPrincipleReport:
    cells: int
    sup_gap: float
    rel_gap: float


def maximum_principle_check(u: GridFunction, v: GridFunction) -> MaxPrincipleReport:
    """On cells strictly inside {u > v} (2h from the set boundary, where the
    max is smooth), H_m(max(u,v)) equals H_m(u); reports the sup density gap.
    """
    dom = u.domain
    geom = StencilGeometry.build(dom, outer=True)
    scale = max(float(np.abs(u.values).max()), float(np.abs(v.values).max()), 1e-12)
    slack = 4 * dom.h**2 * scale * 1e-2 + 1e-12
    S = dom.interior & (u.values > v.values + slack)
    deep = S.copy()
    for _ in range(2):
        er = deep.copy()
        for d in range(2 * dom.n):
            er &= np.roll(deep, 1, axis=d) & np.roll(deep, -1, axis=d)
        deep = er
    deep &= geom.clean
    w = GridFunction(dom, np.maximum(u.values, v.values))
    dw = measure_with_geometry(w, geom)
    du = measure_with_geometry(u, geom)
    if not deep.any():
        return MaxPrincipleReport(cells=0, sup_gap=0.0, rel_gap=0.0)
    gap = float(np.abs(dw.density - du.density)[deep].max())
    peak = float(np.abs(du.density[deep]).max()) + 1e-300
    return MaxPrincipleReport(cells=int(deep.sum()), sup_gap=gap,
                              rel_gap=gap / max(peak, 1e-12))
