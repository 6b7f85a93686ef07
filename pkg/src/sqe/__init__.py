"""Spectral simulation toolkit for a renormalized stochastic heat equation
with an odd polynomial (Wick-ordered) nonlinearity on the 2-torus.

Layers: spectral fields and kernels (`spectral`), Littlewood-Paley / Besov
analysis (`besov`), keyed noise, Ornstein-Uhlenbeck dynamics and Wick
diagrams (`noise`), the deterministic remainder solver (`solver`), the full
split process (`dynamics`), derivative/coupling estimators (`sensitivity`),
equilibrium oracles and controllability probes (`equilibrium`), and the
experiment harness (`config`, `experiments`, `cli`).
"""

from .spectral import (ModeSet, SpectralField, make_mode_set, eval_on_grid,
                       grid_coeffs, dealiased_product, multiply_fields,
                       heat_semigroup, heat_multiplier, phi1_multiplier,
                       power_mode_set, next_pow2, product_grid, Kernel,
                       power_kernel, kernel_convolve, verify_kernel_bound)
from .besov import (DyadicPartition, BesovIndex, WeightedNormSpec,
                    build_dyadic_partition, partition_for, lp_block,
                    besov_norm, holder_norm, weighted_diagram_norm,
                    bony_decompose, BlockNormEvaluator, GridNormEvaluator,
                    inequality_suite, random_spectral_coeffs)
from .noise import (NoiseKey, noise_draws, draw_for, renorm_constant,
                    OUTransition, OUState, sample_stationary_ou, ou_step,
                    stationary_rep_coeffs,
                    hermite, hermite_values, Trajectory, DiagramSet,
                    wick_trajectory, shifted_wick, assemble_Z, ZVector,
                    analytic_wick_covariance, covariance_of_observable)
from .solver import (SolverConfig, nonlinearity_F, nonlinearity_F_prime,
                     etd_step, solve_remainder, zero_diagrams,
                     local_existence_time, energy_diagnostics,
                     comparison_bound, prop_exponents, apriori_check,
                     ExplosionError, EnergyLedger)
from .dynamics import (ProcessState, RunSpec, ProcessEngine, simulate,
                       restart_diagrams, markov_consistency,
                       default_dictionary, moment_survey)
from .sensitivity import (CutoffSpec, cutoff_chi, stopping_time, LinearFlow,
                          solve_linearization, Observable, make_observable,
                          bel_estimator, tv_experiment)
from .equilibrium import (GibbsSpec, gibbs_log_density, metropolis_sample,
                          equilibrium_compare, mixing_experiment,
                          fit_geometric_decay, ControlProblem,
                          control_to_target, ProbeSequence, support_probe)
from .report import ExperimentReport, Metric, config_hash
from .config import ExperimentConfig, ConfigError, parse_config
from .experiments import run_experiment

__version__ = "1.0.0"
