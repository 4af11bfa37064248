"""Desk-scale numerical toolkit for the complex m-Hessian operator
H_m(u) = (dd^c u)^m ^ beta^{n-m}: grid and radial calculus, capacities and
extremal functions, finite-energy functionals, and solvers for H_m(u) = mu.
"""

from .calculus import (ComplexHessianField, GridResolutionError,
                       NotMSubharmonicError, complex_hessian,
                       hessian_measure_smooth, integrate, is_m_positive,
                       mixed_measure, polarized_sigma_m, sigma_k)
from .energy import (EnergyReport, capacity_energy_bound, energy_E, energy_Ep,
                     functional_F, functional_L, holder_constant,
                     holder_energy_check, low_exponent_check, mutual_energy,
                     sublevel_capacity_check)
from .envelope import (CapacityResult, EnvelopeError, GridSet, ObstacleProblem,
                       balayage_check, hausdorff_content, msh_envelope,
                       polarity_probe, relative_extremal)
from .grid import (GridDomain, GridFunction, MeasureDensity, ball_volume,
                   grid_to_csv, load_grid, norm_constant, save_grid,
                   sphere_area)
from .radial import (MassNotConvergedError, RadialMeasure, RadialProfile,
                     cap_of_ball_formula, class_thresholds, combine_profiles,
                     extremal_ball_profile, phi_alpha_profile, power_profile,
                     quadratic_profile, radial_energy, radial_hessian_density,
                     radial_total_mass, sample_to_grid, sharp_exponent,
                     shell_mass_conservative)
from .solver import (ComparisonReport, DerivativeReport, MaxPrincipleReport,
                     SolveConfig, SolveResult, comparison_harness,
                     derivative_lemma_check, maximum_principle_check, solve,
                     solve_grid, solve_radial, solve_variational)

__version__ = "0.1.0"
