"""Structure-preserving solver for the 1D homogeneous and kinetic Lévy-Fokker-Planck equations."""

from ._errors import ConfigError, DomainError, EvaluationError, NumericalError
from .config import RunConfig, parse_config
from .integrators import (PhaseGrid, hermite_reconstruct, solve_linear, step_homogeneous,
                          step_kinetic_euler, step_kinetic_sl)
from .operator import (LfpOperator, assemble_gamma_truncated, assemble_lfp, assemble_lfp_fullline,
                       assemble_lfp_gaussian_limit, compute_vm, exterior_mass, exterior_mass_continuous)
from .reference import Tc1Params, Tc3Params, error_norms, exact_homogeneous, exact_kinetic, g_exponent
from .stable_density import AlphaParam, eval_density, fractional_constant, sample_equilibrium
from .studies import StudyReport, run_convergence_study, run_decay_study, run_tail_study
from .weights import (VelocityGrid, WeightTable, apply_lambda_fullline, assemble_lambda_truncated,
                      build_weights, gauss_2f1, phi_alpha)

__version__ = "0.1.0"
