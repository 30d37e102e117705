"""Adaptive spectral Galerkin solvers for periodic elliptic problems."""

from .core import (H1, HMINUS1, IndexSet, Mode, SpectralVector, ball_indices,
                   mode_key, scaling, zero_vector)
from .operators import (CoefficientSpectrum, DecayCertificate,
                        EllipticOperator, InverseDecayResult, apply_operator,
                        certify_decay, coercivity_bounds, entry,
                        inverse_decay_rate, make_operator, truncate_operator,
                        truncation_bound)
from .galerkin import (GalerkinSolution, Residual, energy_inner, energy_norm,
                       estimator, feasible_residual, residual, solve)
from .adaptivity import coarse, dorfler, e_dorfler, enrich, select_enrichment_radius
from .sparsity import (AlgebraicClassParams, ClassFit, ExponentialClassParams,
                       algebraic_quasinorm, best_n_error, exponential_norm,
                       fit_class, min_dofs)
from .algorithms import (AlgorithmConfig, Problem, RunTrace,
                         check_cardinality_bounds, predicted_contraction, run)
from .lab import FIXTURES, FixtureResult, fixture

__version__ = "0.1.0"
