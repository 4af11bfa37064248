"""Pointwise complex m-Hessian calculus on n = 2 grids.

Complex Hessian entries u_{j k-bar} are assembled from centered second
differences of order h^2. Two boundary treatments coexist:

* ``raw`` - plain lattice differences using the stored values everywhere;
  exact-to-O(h^2) for globally smooth samples such as |z|^2 or Re(z1^2).
* ``zero_extension`` - the function is treated as a model-class potential
  extended by 0 across the sphere {|z| = R}. Diagonal second differences use
  unequal arms pinned to 0 at the exact sphere crossing (the kink of the
  extension would otherwise pollute an O(h)-thick rim at O(1/h) strength);
  mixed entries read 0 at exterior sites and are replaced on rim cells by
  inward extrapolation from cells with fully interior stencils.

The same unequal-arm machinery accepts additional pinned interfaces (used by
the envelope module to enforce ball obstacles at sub-grid accuracy).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .grid import GridDomain, GridFunction, MeasureDensity


class NotMSubharmonicError(ValueError):
    """Raised when a grid function fails the m-positivity gate."""


class GridResolutionError(ValueError):
    """Raised when the grid cannot host the required stencils."""


def sigma_k(lam, k: int):
    """k-th elementary symmetric polynomial of the rows of ``lam``.

    ``lam`` has shape (..., n); k = 0 returns 1.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if not (0 <= k <= n):
        raise ValueError(f"sigma_k needs 0 <= k <= {n}, got k={k}")
    e = np.zeros(lam.shape[:-1] + (n + 1,))
    e[..., 0] = 1.0
    for i in range(n):
        hi = min(i + 1, n)
        for j in range(hi, 0, -1):
            e[..., j] += lam[..., i] * e[..., j - 1]
    return e[..., k]


def roll(a: np.ndarray, d: int, sg: int) -> np.ndarray:
    """Neighbour view at x + sg*h*e_d (wraparound touches no interior site)."""
    return np.roll(a, -sg, axis=d)


def _crossing_theta(szsq, coord, h, rho, sign):
    """Fractional arm length theta in (0,1] where |x + sign*theta*h*e_d| = rho.

    Infinity where the unit arm does not cross the sphere of radius rho.
    """
    a = h * h
    b = 2.0 * sign * h * coord
    c = szsq - rho * rho
    disc = b * b - 4.0 * a * c
    ok = disc >= 0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    t1 = (-b - sq) / (2 * a)
    t2 = (-b + sq) / (2 * a)
    hi = 1.0 + 1e-9  # accept arm-end crossings despite round-off
    t1 = np.where((t1 > 1e-12) & (t1 <= hi), t1, np.inf)
    t2 = np.where((t2 > 1e-12) & (t2 <= hi), t2, np.inf)
    return np.where(ok, np.minimum(t1, t2), np.inf)


@dataclass
class StencilGeometry:
    """Per-direction arm data for diagonal second differences.

    theta[d][sg] is the fractional arm length toward +/- e_d (1 where the arm
    is a regular lattice link), pin[d][sg] the value pinned at the crossing,
    crossed[d][sg] marks arms that end on an interface instead of a lattice
    site. gamma_j is the center-value coefficient of the complex-direction
    diagonal entry: u_{jj-bar}(u0) = NB_j - gamma_j * u0.
    """

    domain: GridDomain
    theta: list
    pin: list
    crossed: list
    active: np.ndarray

    #: interior points closer than this (in units of h) to the sphere are
    #: absorbed into the boundary: tangency points otherwise produce
    #: degenerate zero-length arms
    ABSORB = 1e-7

    @classmethod
    def build(cls, domain: GridDomain, outer: bool = True,
              inner_balls: tuple = (), inner_value: float = -1.0,
              in_set: np.ndarray | None = None):
        """Arm data for the sphere {|z| = R} (pinned 0) and, optionally, for
        obstacle balls (pinned ``inner_value`` on arms leaving ``in_set``)."""
        h = domain.h
        szsq = domain.radius_sq
        active = domain.interior & (domain.R - domain.radius > cls.ABSORB * h)
        shape = domain.shape
        coords = domain.coords()
        theta, pin, crossed = [], [], []
        for d in range(2 * domain.n):
            th_d, pin_d, cr_d = {}, {}, {}
            coord = np.broadcast_to(coords[d], shape)
            for sg in (+1, -1):
                th = np.ones(shape)
                pv = np.zeros(shape)
                cr = np.zeros(shape, dtype=bool)
                if outer:
                    nbr_in = roll(active, d, sg)
                    hit = active & ~nbr_in
                    t = _crossing_theta(szsq, coord, h, domain.R, sg)
                    # no-root arms graze the sphere toward an absorbed
                    # neighbour: pin the full arm (value consistent to the
                    # graze depth)
                    t = np.where(np.isfinite(t), np.clip(t, 1e-6, 1.0), 1.0)
                    th = np.where(hit, t, th)
                    cr |= hit
                for (center, r0) in inner_balls:
                    dsq = sum((np.broadcast_to(c, shape) - c0) ** 2
                              for c, c0 in zip(coords, center))
                    cd = coord - center[d]
                    nbr_in_ball = roll(in_set, d, sg) if in_set is not None else None
                    t = _crossing_theta(dsq, cd, h, r0, sg)
                    hit = (~in_set) & active & nbr_in_ball
                    t_ok = np.where(np.isfinite(t), np.clip(t, 1e-6, 1.0), 1.0)
                    th = np.where(hit, np.minimum(t_ok, th), th)
                    pv = np.where(hit, inner_value, pv)
                    cr |= hit
                th_d[sg], pin_d[sg], cr_d[sg] = th, pv, cr
            theta.append(th_d)
            pin.append(pin_d)
            crossed.append(cr_d)
        return cls(domain, theta, pin, crossed, active)

    def diag_parts(self, u: np.ndarray, j: int):
        """(NB_j, gamma_j) of the diagonal entry u_{jj-bar} = NB_j - gamma_j u0."""
        h = self.domain.h
        NB = np.zeros_like(u)
        gamma = np.zeros_like(u)
        for d in (2 * j, 2 * j + 1):
            thp, thm = self.theta[d][+1], self.theta[d][-1]
            wp = 1.0 / (thp * (thp + thm))
            wm = 1.0 / (thm * (thp + thm))
            vp = np.where(self.crossed[d][+1], self.pin[d][+1], roll(u, d, +1))
            vm = np.where(self.crossed[d][-1], self.pin[d][-1], roll(u, d, -1))
            NB += wp * vp + wm * vm
            gamma += 1.0 / (thp * thm)
        return NB / (2 * h * h), gamma / (2 * h * h)

    @property
    def clean(self) -> np.ndarray:
        """Interior cells whose full stencil (arms and mixed corners) stays
        on interior lattice sites."""
        def build():
            dom = self.domain
            ok = self.active.copy()
            act = self.active
            for d in range(2 * dom.n):
                for sg in (+1, -1):
                    ok &= roll(act, d, sg) & ~self.crossed[d][sg]
            for (a, b) in ((0, 2), (0, 3), (1, 2), (1, 3)):
                for sa in (+1, -1):
                    for sb in (+1, -1):
                        ok &= roll(roll(act, a, sa), b, sb)
            return ok
        store = self.__dict__.setdefault("_cached", {})
        if "clean" not in store:
            store["clean"] = build()
        return store["clean"]


def _mixed_diff(u: np.ndarray, a: int, b: int, h: float) -> np.ndarray:
    """Centered 4-point mixed second difference along real axes a, b."""
    return (roll(roll(u, a, +1), b, +1) + roll(roll(u, a, -1), b, -1)
            - roll(roll(u, a, +1), b, -1) - roll(roll(u, a, -1), b, +1)) / (4 * h * h)


def _inward_fill(arr: np.ndarray, valid: np.ndarray, region: np.ndarray,
                 passes: int = 3) -> np.ndarray:
    """Replace ``region & ~valid`` cells by means of valid axis neighbours."""
    out = np.where(valid, arr, 0.0)
    ok = valid.copy()
    for _ in range(passes):
        acc = np.zeros_like(out)
        cnt = np.zeros_like(out)
        for d in range(out.ndim):
            for sg in (+1, -1):
                nb_ok = roll(ok, d, sg)
                acc += np.where(nb_ok, roll(out, d, sg), 0.0)
                cnt += nb_ok
        fill = region & ~ok & (cnt > 0)
        out = np.where(fill, acc / np.maximum(cnt, 1), out)
        ok = ok | fill
    out = np.where(region & ~ok, arr, out)  # isolated cells keep raw values
    return out


@dataclass
class ComplexHessianField:
    """Per-point 2x2 Hermitian complex Hessian and its eigenvalues.

    Component arrays live on the full lattice; entries outside the interior
    mask are zero. ``clean`` marks cells whose stencil never touched the
    boundary rim.
    """

    domain: GridDomain
    H11: np.ndarray
    H22: np.ndarray
    reH12: np.ndarray
    imH12: np.ndarray
    clean: np.ndarray

    @property
    def lam(self):
        """Eigenvalues (lam1 <= lam2) of the Hermitian entries."""
        mean = 0.5 * (self.H11 + self.H22)
        radius = np.sqrt(0.25 * (self.H11 - self.H22) ** 2
                         + self.reH12**2 + self.imH12**2)
        return mean - radius, mean + radius

    def sigma(self, k: int) -> np.ndarray:
        if k == 0:
            return np.ones(self.domain.shape)
        if k == 1:
            return self.H11 + self.H22
        if k == 2:
            return self.H11 * self.H22 - self.reH12**2 - self.imH12**2
        raise ValueError("n = 2 grids have sigma_k for k <= 2 only")

    def matrices(self, where: np.ndarray | None = None) -> np.ndarray:
        """Explicit (N, 2, 2) complex Hermitian matrices at selected cells."""
        sel = self.domain.interior if where is None else where
        flat = np.flatnonzero(sel)
        H = np.zeros((flat.size, 2, 2), dtype=complex)
        H[:, 0, 0] = self.H11.ravel()[flat]
        H[:, 1, 1] = self.H22.ravel()[flat]
        off = self.reH12.ravel()[flat] + 1j * self.imH12.ravel()[flat]
        H[:, 0, 1] = off
        H[:, 1, 0] = off.conj()
        return H

    def eigenvalues(self, where: np.ndarray | None = None) -> np.ndarray:
        """Hermitian eigensolver route, sorted ascending, shape (N, 2)."""
        return np.linalg.eigvalsh(self.matrices(where))

    def __add__(self, other: "ComplexHessianField") -> "ComplexHessianField":
        return ComplexHessianField(
            self.domain, self.H11 + other.H11, self.H22 + other.H22,
            self.reH12 + other.reH12, self.imH12 + other.imH12,
            self.clean & other.clean)


def complex_hessian(u: GridFunction, boundary: str = "auto",
                    geometry: StencilGeometry | None = None) -> ComplexHessianField:
    """Discrete complex Hessian [d^2 u / dz_j dz-bar_k] of a grid function.

    boundary: ``raw`` (plain lattice differences), ``zero_extension``
    (model-class treatment, see module docstring) or ``auto`` (zero_extension
    exactly when the sample qualifies as model-class).
    """
    dom = u.domain
    if dom.points_per_axis < 9:
        raise GridResolutionError("grid underresolved")
    if boundary == "auto":
        boundary = "zero_extension" if u.is_model_class else "raw"
    if boundary not in ("raw", "zero_extension"):
        raise ValueError(f"unknown boundary treatment {boundary!r}")
    h = dom.h
    vals = u.values

    if boundary == "raw":
        def d2(dax):
            return (roll(vals, dax, +1) - 2 * vals + roll(vals, dax, -1)) / (h * h)
        H11 = 0.25 * (d2(0) + d2(1))
        H22 = 0.25 * (d2(2) + d2(3))
        clean = support = dom.interior
    else:
        geom = geometry or _default_geometry(dom)
        NB1, g1 = geom.diag_parts(vals, 0)
        NB2, g2 = geom.diag_parts(vals, 1)
        H11 = NB1 - g1 * vals
        H22 = NB2 - g2 * vals
        clean = geom.clean
        support = geom.active

    reH12 = 0.25 * (_mixed_diff(vals, 0, 2, h) + _mixed_diff(vals, 1, 3, h))
    imH12 = 0.25 * (_mixed_diff(vals, 0, 3, h) - _mixed_diff(vals, 1, 2, h))
    if boundary == "zero_extension":
        reH12 = _inward_fill(reH12, clean, support)
        imH12 = _inward_fill(imH12, clean, support)

    zero = np.zeros(dom.shape)
    return ComplexHessianField(
        dom,
        np.where(support, H11, zero), np.where(support, H22, zero),
        np.where(support, reH12, zero), np.where(support, imH12, zero),
        clean)


def _default_geometry(dom: GridDomain) -> StencilGeometry:
    store = dom.__dict__.setdefault("_cached", {})
    if "geometry" not in store:
        store["geometry"] = StencilGeometry.build(dom, outer=True)
    return store["geometry"]


def default_tolerance(field: ComplexHessianField) -> np.ndarray:
    """Per-point m-positivity slack 10 h^2 max|lambda| (absorbs O(h^2)
    discretization error without masking genuine cone violations)."""
    lam1, lam2 = field.lam
    scale = np.maximum(np.abs(lam1), np.abs(lam2))
    return 10.0 * field.domain.h**2 * scale + 1e-12


def is_m_positive(field: ComplexHessianField, tol=None) -> np.ndarray:
    """Pointwise test sigma_j(lambda) >= -tol for j = 1..m.

    Non-interior cells are vacuously positive. ``tol`` may be a scalar or a
    per-point array; default is the h^2-scaled slack of
    :func:`default_tolerance`.
    """
    if tol is None:
        tol = default_tolerance(field)
    tol = np.asarray(tol, dtype=float)
    if np.any(tol < 0):
        raise ValueError("tolerance must be nonnegative")
    ok = np.ones(field.domain.shape, dtype=bool)
    for j in range(1, field.domain.m + 1):
        ok &= field.sigma(j) >= -tol
    return ok | ~field.domain.interior


def hessian_measure_smooth(u: GridFunction, tol=None, check: bool = True,
                           boundary: str = "auto",
                           geometry: StencilGeometry | None = None) -> MeasureDensity:
    """Hessian measure density c(n,m) sigma_m(lambda) of a C^2-resolved
    m-subharmonic grid function; zero outside the interior mask."""
    dom = u.domain
    field = complex_hessian(u, boundary=boundary, geometry=geometry)
    if tol is None:
        tol = default_tolerance(field)
    if check:
        ok = is_m_positive(field, tol)
        if not ok.all():
            bad = np.argwhere(~ok)[0]
            sig = [float(field.sigma(j)[tuple(bad)]) for j in range(1, dom.m + 1)]
            raise NotMSubharmonicError(
                f"not m-subharmonic at point {tuple(int(b) for b in bad)}: "
                f"sigma_1..m = {sig}")
    density = dom.c_nm * field.sigma(dom.m)
    density = np.where(dom.interior, density, 0.0)
    return MeasureDensity(dom, density, clean=field.clean)


def rim_extended(dom: GridDomain, density: np.ndarray) -> np.ndarray:
    """Extend an interior density outward by one layer (axis-neighbour
    mean) so the partial cells of just-exterior points carry mass."""
    rim = ~dom.interior & (dom.cell_weight > 0)
    if not rim.any():
        return density
    acc = np.zeros(dom.shape)
    cnt = np.zeros(dom.shape)
    inter = dom.interior
    for d in range(2 * dom.n):
        for sg in (+1, -1):
            nb_in = roll(inter, d, sg)
            acc += np.where(nb_in, roll(density, d, sg), 0.0)
            cnt += nb_in
    fill = np.where(cnt > 0, acc / np.maximum(cnt, 1), 0.0)
    return np.where(rim, fill, density)


def grid_quadrature(dom: GridDomain, density: np.ndarray, weight=None) -> float:
    """Midpoint quadrature with first-order partial boundary cells."""
    dens = rim_extended(dom, density)
    total = dens * dom.cell_weight
    if weight is not None:
        total = total * weight
    return float(np.sum(total) * dom.h ** (2 * dom.n))


def integrate(density: MeasureDensity, weight=1.0) -> float:
    """Quadrature of a weight against a measure: midpoint rule with
    first-order partial cells at the rim, plus exact addition of spherical
    surface masses times the weight's spherical average."""
    dom = density.domain
    if isinstance(weight, GridFunction):
        if weight.domain is not dom and weight.domain.shape != dom.shape:
            raise ValueError("weight grid does not match measure grid")
        w = weight.values
    else:
        w = None if weight == 1.0 else np.full(dom.shape, float(weight))
    total = grid_quadrature(dom, density.density, w)
    for (rad, mass) in density.surface:
        if isinstance(weight, GridFunction):
            total += mass * _spherical_average(weight, rad)
        else:
            total += mass * float(weight)
    return total


def _spherical_average(gf: GridFunction, rad: float) -> float:
    """Shell-binned average of a grid function at radius ``rad``."""
    dom = gf.domain
    s = dom.radius
    h = dom.h
    band = np.abs(s - rad) < h
    if not band.any():
        raise ValueError(f"no lattice shell near radius {rad}")
    w = np.maximum(h - np.abs(s - rad), 0.0)[band]
    return float(np.sum(gf.values[band] * w) / np.sum(w))


# ---------------------------------------------------------------------------
# mixed (polarized) sigma_m densities
# ---------------------------------------------------------------------------

def polarized_sigma_m(fields, m: int) -> np.ndarray:
    """Mixed form D_m(H_1, ..., H_m) via inclusion-exclusion polarization,

        D_m = (1/m!) sum_{S nonempty} (-1)^{m-|S|} sigma_m(sum_{i in S} H_i),

    multilinear and symmetric with D_m(H, ..., H) = sigma_m(lambda(H)).
    Cost 2^m sigma evaluations per point (m <= 3 in practice).
    """
    fields = list(fields)
    if len(fields) != m:
        raise ValueError(f"need exactly m={m} Hessian fields, got {len(fields)}")
    from itertools import combinations
    from math import factorial
    shape = fields[0].domain.shape
    acc = np.zeros(shape)
    for size in range(1, m + 1):
        sign = (-1) ** (m - size)
        for subset in combinations(range(m), size):
            total = fields[subset[0]]
            for i in subset[1:]:
                total = total + fields[i]
            acc += sign * total.sigma(m)
    return acc / factorial(m)


def mixed_measure(fields, m: int, domain: GridDomain) -> MeasureDensity:
    """Measure density c(n,m) D_m(H_1,...,H_m), zero outside the interior."""
    dens = domain.c_nm * polarized_sigma_m(fields, m)
    dens = np.where(domain.interior, dens, 0.0)
    clean = fields[0].clean.copy()
    for f in fields[1:]:
        clean &= f.clean
    return MeasureDensity(domain, dens, clean=clean)
