"""Grid representation of ball domains in C^n and grid-sampled potentials.

A GridDomain is a uniform lattice on the box [-R_box, R_box]^{2n} whose
interior mask is the ball {|z| < R}. Full-grid calculus is restricted to
n = 2 (four real dimensions); higher complex dimension is served by the
radial module. The normalization constant c(n, m) converts the m-th
elementary symmetric function of the complex-Hessian eigenvalues into the
Hessian-measure density with respect to Lebesgue volume.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from math import comb, factorial, pi

import numpy as np

MAGIC = "MHESS1"

#: axis order of the value arrays for n = 2: (x1, y1, x2, y2)
AXES_PER_COMPLEX_DIM = 2


def norm_constant(n: int, m: int) -> float:
    """Density normalization c(n,m) in H_m(u) = c(n,m) * sigma_m(lambda) dV.

    For m < n the constant is pinned by requiring the total Hessian mass of
    the extremal function of B(r) in B(R) to reproduce the closed capacity
    formula 2^n (n-m) / (m n! (r^{2-2a} - R^{2-2a})^m), a = n/m:

        c(n,m) = 2^n m^{m-1} / (pi^n binom(n,m) (n-m)^{m-1})

    For m = n that formula degenerates (the extremal kernel is logarithmic);
    we use c(n,n) = (2/pi)^n n!, which normalizes the capacity of concentric
    balls to log(R/r)^{-n}. Every m = n quantity exercised by the toolkit is
    invariant under rescaling of c(n,n).
    """
    if not (1 <= m <= n):
        raise ValueError(f"need 1 <= m <= n, got n={n}, m={m}")
    if m < n:
        return 2.0**n * m ** (m - 1) / (pi**n * comb(n, m) * (n - m) ** (m - 1))
    return (2.0 / pi) ** n * factorial(n)


def ball_volume(n: int, R: float) -> float:
    """Lebesgue volume of the ball of radius R in C^n = R^{2n}."""
    return pi**n * R ** (2 * n) / factorial(n)


def sphere_area(n: int, R: float) -> float:
    """Surface measure of the sphere {|z| = R} in C^n."""
    return 2 * pi**n * R ** (2 * n - 1) / factorial(n - 1)


MASK_EXTERIOR = 0
MASK_BOUNDARY = 1
MASK_INTERIOR = 2


@dataclass(frozen=True)
class GridDomain:
    """Uniform lattice over a ball domain in C^n (full grids: n = 2 only)."""

    n: int
    m: int
    R: float
    points_per_axis: int

    def __post_init__(self):
        if self.n != 2:
            raise ValueError("full-grid domains support n = 2 only; "
                             "use the radial module for other n")
        if not (1 <= self.m <= self.n):
            raise ValueError(f"need 1 <= m <= n, got m={self.m}, n={self.n}")
        if self.points_per_axis < 9 or self.points_per_axis % 2 == 0:
            raise ValueError("points_per_axis must be an odd integer >= 9")
        if self.R <= 0:
            raise ValueError("R must be positive")

    @property
    def h(self) -> float:
        return 2.0 * self.R / (self.points_per_axis - 1)

    @property
    def c_nm(self) -> float:
        return norm_constant(self.n, self.m)

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * (2 * self.n)

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.R, self.R, self.points_per_axis)

    def coords(self, sparse: bool = True):
        """Meshgrid of the 2n real coordinates (x1, y1, x2, y2)."""
        ax = self.axis
        return np.meshgrid(*([ax] * (2 * self.n)), indexing="ij", sparse=sparse)

    @property
    def radius_sq(self) -> np.ndarray:
        """|z|^2 at every lattice point."""
        return self._cache("radius_sq", lambda: sum(c**2 for c in self.coords()))

    @property
    def radius(self) -> np.ndarray:
        return self._cache("radius", lambda: np.sqrt(self.radius_sq))

    @property
    def interior(self) -> np.ndarray:
        return self._cache("interior", lambda: self.radius < self.R)

    @property
    def mask(self) -> np.ndarray:
        """Per-point flag: interior (2), boundary (1, exterior point with an
        interior axis neighbour), exterior (0)."""
        def build():
            inter = self.interior
            near = np.zeros_like(inter)
            for d in range(2 * self.n):
                near |= np.roll(inter, 1, axis=d) | np.roll(inter, -1, axis=d)
            out = np.full(self.shape, MASK_EXTERIOR, dtype=np.int8)
            out[near & ~inter] = MASK_BOUNDARY
            out[inter] = MASK_INTERIOR
            return out
        return self._cache("mask", build)

    @property
    def cell_weight(self) -> np.ndarray:
        """Fraction of each lattice cell inside the ball (first-order cut).
        Exterior points within h/2 of the sphere carry their partial cells;
        quadrature extends densities outward one layer to meet them."""
        def build():
            return np.clip((self.R - self.radius) / self.h + 0.5, 0.0, 1.0)
        return self._cache("cell_weight", build)

    @property
    def parity(self) -> np.ndarray:
        """Checkerboard parity (sum of lattice indices mod 2)."""
        def build():
            P = self.points_per_axis
            idx = sum(np.meshgrid(*([np.arange(P)] * (2 * self.n)),
                                  indexing="ij", sparse=True))
            return (idx % 2).astype(bool)
        return self._cache("parity", build)

    def _cache(self, key, builder):
        store = self.__dict__.setdefault("_cached", {})
        if key not in store:
            store[key] = builder()
        return store[key]

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)


@dataclass
class GridFunction:
    """Real values on the lattice; model-class candidates are <= 0 on the
    interior and exactly 0 on boundary/exterior points."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.domain.shape:
            raise ValueError("values shape does not match domain")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function contains non-finite values")

    @property
    def is_model_class(self) -> bool:
        """True when the sample is a candidate for the zero-boundary model
        class: vanishes off the ball and is <= 0 inside."""
        dom = self.domain
        outside_ok = not np.any(self.values[~dom.interior])
        inside_ok = np.all(self.values[dom.interior] <= 1e-14)
        return bool(outside_ok and inside_ok)

    def clipped_model(self) -> "GridFunction":
        """Project onto the model-class sign constraints (<= 0 inside,
        0 outside). Does not enforce m-positivity."""
        v = np.where(self.domain.interior, np.minimum(self.values, 0.0), 0.0)
        return GridFunction(self.domain, v)

    def copy(self) -> "GridFunction":
        return GridFunction(self.domain, self.values.copy())

    def __add__(self, other):
        if isinstance(other, GridFunction):
            return GridFunction(self.domain, self.values + other.values)
        return NotImplemented

    def __mul__(self, t: float):
        return GridFunction(self.domain, self.values * float(t))

    __rmul__ = __mul__

    def max_with(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.domain, np.maximum(self.values, other.values))


@dataclass
class MeasureDensity:
    """Absolutely continuous part of a positive measure on the grid.

    Spherical surface masses appear only through the radial module; grid
    measures created there may carry them as (radius, total_mass) pairs for
    bookkeeping in quadrature.
    """

    domain: GridDomain
    density: np.ndarray
    surface: list = field(default_factory=list)
    clean: np.ndarray | None = None  # cells whose stencils avoided the rim

    def __post_init__(self):
        self.density = np.asarray(self.density, dtype=float)
        if self.density.shape != self.domain.shape:
            raise ValueError("density shape does not match domain")

    def total_mass(self) -> float:
        from .calculus import grid_quadrature
        mass = grid_quadrature(self.domain, self.density)
        mass += sum(m for _, m in self.surface)
        return mass


# ---------------------------------------------------------------------------
# serialization: text header + row-major little-endian float64 payload
# ---------------------------------------------------------------------------

def save_grid(path, gf: GridFunction) -> None:
    dom = gf.domain
    header = (f"{MAGIC} {dom.n} {dom.m} {dom.R!r} {dom.points_per_axis} "
              f"{dom.c_nm!r}\n")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(gf.values.astype("<f8").tobytes(order="C"))


def load_grid(path) -> GridFunction:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if not header or header[0] != MAGIC:
            raise ValueError(f"not a {MAGIC} grid file: {path}")
        n, m = int(header[1]), int(header[2])
        R = float(header[3])
        P = int(header[4])
        dom = GridDomain(n=n, m=m, R=R, points_per_axis=P)
        payload = fh.read()
    values = np.frombuffer(payload, dtype="<f8", count=P ** (2 * n)).reshape(dom.shape)
    return GridFunction(dom, values.copy())


def grid_to_csv(gf: GridFunction, fh: io.TextIOBase, interior_only: bool = True) -> None:
    """CSV export: point index, coordinates, value."""
    dom = gf.domain
    fh.write("index,x1,y1,x2,y2,value\n")
    coords = dom.coords(sparse=False)
    sel = dom.interior if interior_only else np.ones(dom.shape, dtype=bool)
    flat = np.flatnonzero(sel)
    cols = [c.ravel()[flat] for c in coords]
    vals = gf.values.ravel()[flat]
    for i, idx in enumerate(flat):
        fh.write(f"{idx},{cols[0][i]:.17g},{cols[1][i]:.17g},"
                 f"{cols[2][i]:.17g},{cols[3][i]:.17g},{vals[i]:.17g}\n")
