"""Positive perturbations of C0-semigroups on AM-spaces, on a uniform grid."""
__version__ = "0.1.0"

from .lattice import (GridFunction, SpaceTag, grid, integrate, interp_eval, is_nonnegative,
                      lattice_inf, lattice_sup, sup_norm)
from .semigroups import (ROTATION, SHIFT, GeneratorKind, GeneratorSpec, apply_semigroup, generator_for,
                         resolvent)
from .extrapolation import (ExtrapolatedElement, embed, extrapolated_resolvent, extrapolated_semigroup,
                            is_positive, norm_minus_one)
from .perturbations import (ConvergenceError, DeschReport, RankOnePerturbation, SeriesDivergenceError,
                            desch_condition, neumann_series, perturbed_resolvent, split_schedule)
from .dyson_phillips import DPConfig, EvolutionResult, dp_evolve, dp_evolve_staged, dp_tail_bound, dp_term
from .oracles import characteristics_solution, discrete_resolvent_oracle, volterra_mass
