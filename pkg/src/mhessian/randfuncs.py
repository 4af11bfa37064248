"""Seeded generators of random model-class test functions.

Instances are built from pieces that are m-subharmonic by construction
(positive combinations and pointwise maxima stay in the cone; the classes
are convex): extremal-ball profiles, capped/smoothed power-family profiles
(the kappa family replaces the alpha family when m = n, which is void
there), quadratic profiles, and off-center paraboloid pockets
max(u, A|z - z0|^2 - C) calibrated to stay nonpositive on the domain.
All randomness flows through an explicit numpy Generator.
"""

from __future__ import annotations

import numpy as np

from .grid import GridDomain, GridFunction
from .radial import (RadialProfile, combine_profiles, extremal_ball_profile,
                     phi_alpha_profile, power_profile, quadratic_profile,
                     sample_to_grid)


def random_radial_profile(rng: np.random.Generator, n: int, m: int, R: float,
                          bounded: bool = True) -> RadialProfile:
    """Positive combination of 1-3 admissible radial pieces."""
    pieces, weights = [], []
    n_pieces = rng.integers(1, 4)
    for _ in range(n_pieces):
        kind = rng.integers(0, 3)
        if kind == 0 and m < n:
            r = rng.uniform(0.2, 0.8) * R
            pieces.append(extremal_ball_profile(r, R, n, m))
        elif kind == 1:
            if m < n:
                amax = (n - m) / m
                alpha = rng.uniform(0.1, 0.9) * amax
                if rng.random() < 0.5:
                    pieces.append(phi_alpha_profile(alpha, n, m, R=R,
                                                    cap=rng.uniform(0.5, 3.0)))
                else:
                    pieces.append(phi_alpha_profile(alpha, n, m, R=R,
                                                    smooth_t0=rng.uniform(0.05, 0.3) * R * R))
            else:
                pieces.append(power_profile(rng.uniform(0.3, 0.95), n, m, R))
        else:
            pieces.append(quadratic_profile(n, m, R, scale=1.0 / (R * R)))
        weights.append(rng.uniform(0.2, 1.5))
    return combine_profiles(pieces, weights)


def pocket_values(rng: np.random.Generator, domain: GridDomain,
                  base: np.ndarray) -> np.ndarray:
    """One paraboloid pocket max(base, A|z - z0|^2 - C): m-sh for every m,
    <= 0 on the box, equal to base near the boundary sphere."""
    dom = domain
    z0 = rng.uniform(-0.4, 0.4, size=4) * dom.R
    coords = dom.coords()
    dsq = sum((np.broadcast_to(c, dom.shape) - c0) ** 2
              for c, c0 in zip(coords, z0))
    # base value at the pocket center
    i0 = tuple(int(np.argmin(np.abs(dom.axis - c0))) for c0 in z0)
    depth = -float(base[i0])
    if depth <= 1e-9:
        return base
    xi = rng.uniform(0.3, 0.9)
    C = xi * depth
    A = C / (dom.R + float(np.linalg.norm(z0))) ** 2
    arm = A * dsq - C
    return np.maximum(base, np.where(dom.interior, arm, 0.0))


def random_grid_function(rng: np.random.Generator, domain: GridDomain,
                         pockets: bool = True) -> GridFunction:
    """Random model-class grid function: radial combination plus 0-2
    pocket arms (genuinely non-radial mixed Hessian entries)."""
    prof = random_radial_profile(rng, domain.n, domain.m, domain.R)
    vals = sample_to_grid(prof, domain).values
    if pockets:
        for _ in range(rng.integers(0, 3)):
            vals = pocket_values(rng, domain, vals)
    return GridFunction(domain, vals)


def random_ordered_pair(rng: np.random.Generator, domain: GridDomain):
    """(u, v) model-class with u <= v pointwise: either v = theta u with
    theta in (0,1), or u = v + extra positive piece."""
    v = random_grid_function(rng, domain)
    if rng.random() < 0.5:
        theta = rng.uniform(0.2, 0.9)
        return GridFunction(domain, v.values / theta), v
    extra = random_grid_function(rng, domain, pockets=False)
    u = GridFunction(domain, v.values + extra.values)
    return u, v


def random_ordered_radial_pair(rng: np.random.Generator, n: int, m: int, R: float):
    v = random_radial_profile(rng, n, m, R)
    if rng.random() < 0.5:
        return v.scaled(1.0 / rng.uniform(0.2, 0.9)), v
    extra = random_radial_profile(rng, n, m, R)
    return combine_profiles([v, extra]), v
