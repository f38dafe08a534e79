"""Pseudo-spectral simulation and numerical verification of semilinear
stochastic PDEs on the torus.

Modules
-------
spectral   Fourier fields, transforms, derivatives, L^p and Sobolev norms.
elliptic   diagonal and divergence-form operators, semigroups, fractional powers.
functions  certified scalar nonlinearities and separable ``g(x) h(xi)``.
model      drift and diffusion specs, gamma-radonifying norms, certificates.
analysis   chain rule, Moser and interpolation inequalities, Holder norms.
wiener     counter-based Wiener paths with bridge refinement.
solver     exponential Euler Picard iteration and solver oracles.
harness    Monte Carlo moment estimation and scaling studies.
"""

from .analysis import (chain_rule_eval, composite_sobolev_norm, faa_di_bruno_terms, first_order_check,
                       holder_norm, interpolation_check, moser_check, moser_check_x_dependent)
from .baselines import BaselineError, load_baselines, regenerate_baselines
from .config import ExperimentConfig, InitialCondition, load_config
from .elliptic import (DiagonalOperator, DivergenceFormOperator, apply_fractional_power, apply_semigroup,
                       smoothing_bound_check)
from .functions import Affine, AtanScaled, PolynomialClamped, SeparableFunction, Sine, TanhScaled
from .harness import MomentReport, run_moments, theorem_scaling_study, uniformity_check
from .model import (DiffusionSpec, Model, NonlinearitySpec, Term, eval_diffusion_increment, eval_nonlinearity,
                    gamma_norm_closed, gamma_norm_mc, growth_and_lipschitz_certify)
from .solver import (SolverConfig, Trajectory, contraction_probe, direct_solve, factorization_check,
                     linear_oracle, mild_step_accumulate, partitioned_solve, picard_solve)
from .spectral import (SpectralField, derivative, forward_transform, fractional_sobolev_norm, inverse_transform,
                       lp_norm, sobolev_norm)
from .verify import run_full_verification
from .wiener import WienerPath, sample_wiener_path

__version__ = "0.1.0"

__all__ = [
    "Affine", "AtanScaled", "BaselineError", "DiagonalOperator", "DiffusionSpec", "DivergenceFormOperator",
    "ExperimentConfig", "InitialCondition", "Model", "MomentReport", "NonlinearitySpec", "PolynomialClamped",
    "SeparableFunction", "Sine", "SolverConfig", "SpectralField", "TanhScaled", "Term", "Trajectory",
    "WienerPath", "apply_fractional_power", "apply_semigroup", "chain_rule_eval", "composite_sobolev_norm",
    "contraction_probe", "derivative", "direct_solve", "eval_diffusion_increment", "eval_nonlinearity",
    "faa_di_bruno_terms", "factorization_check", "first_order_check", "forward_transform",
    "fractional_sobolev_norm", "gamma_norm_closed", "gamma_norm_mc", "growth_and_lipschitz_certify",
    "holder_norm", "interpolation_check", "inverse_transform", "linear_oracle", "load_baselines",
    "load_config", "lp_norm", "mild_step_accumulate", "moser_check", "moser_check_x_dependent",
    "partitioned_solve", "picard_solve", "regenerate_baselines", "run_full_verification", "run_moments",
    "sample_wiener_path", "smoothing_bound_check", "sobolev_norm", "theorem_scaling_study",
    "uniformity_check",
]
