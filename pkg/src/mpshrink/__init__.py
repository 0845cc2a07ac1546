"""Large-margin perceptron training with weight shrinking.

Implements two margin-perceptron generalizations that shrink the current
weight vector as the first step of every update: a constant factor (whose
allowed strength depends on the maximum margin) and a variable,
update-count-driven factor (which has no such dependence). Both provably
reach any desired fraction of the maximum directional margin in finitely
many updates; this package adds multiple updates, two-level nested active
sets, the 2-norm soft-margin data extension, before/after-run certificates,
and a desk-scale exact-margin oracle for verification.
"""

from .backend import BACKEND_NAME, available_backends, get_kernels
from .certify import (BoundInputs, Certificate, LemmaChecks, StagedResult,
                      StageLog, bound_inputs, certificate_for_run,
                      lemma_check, mpcs_accuracy_params, mpcs_after_run,
                      mpcs_bounds, mpvs_accuracy_params, mpvs_after_run,
                      mpvs_bounds, perceptron_margin_bounds, staged_lambda)
from .data import (Dataset, Pattern, RawExample, build_dataset, dense_matrix,
                   format_example, parse_dataset, pattern_to_dense,
                   sparse_dot)
from .errors import (ConfigError, ConvergenceError, DataFormatError,
                     ModelFormatError, MpshrinkError)
from .model import (Hyperparams, MarginReport, TrainState, derived_params,
                    evaluate_margin, load_model, margin_report, save_model,
                    validate_hyperparams)
from .oracle import (GammaResult, descale_mpcs, exact_gamma_d,
                     exhaustive_gamma_d, min_norm_point, reference_train)
from .scheduler import (ActiveSets, RunResult, build_active_sets,
                        count_margin_errors, train)
from .solvers import (McpsStep, mpcs_apply, mpcs_condition,
                      mpcs_max_multiplicity, mpcs_step, mpvs_apply,
                      mpvs_condition, mpvs_max_multiplicity,
                      perceptron_apply, perceptron_condition,
                      perceptron_max_multiplicity)

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME", "available_backends", "get_kernels",
    "BoundInputs", "Certificate", "LemmaChecks", "StagedResult", "StageLog",
    "bound_inputs", "certificate_for_run", "lemma_check",
    "mpcs_accuracy_params", "mpcs_after_run", "mpcs_bounds",
    "mpvs_accuracy_params", "mpvs_after_run", "mpvs_bounds",
    "perceptron_margin_bounds", "staged_lambda",
    "Dataset", "Pattern", "RawExample", "build_dataset", "dense_matrix",
    "format_example", "parse_dataset", "pattern_to_dense", "sparse_dot",
    "ConfigError", "ConvergenceError", "DataFormatError", "ModelFormatError",
    "MpshrinkError",
    "Hyperparams", "MarginReport", "TrainState", "derived_params",
    "evaluate_margin", "load_model", "margin_report", "save_model",
    "validate_hyperparams",
    "GammaResult", "descale_mpcs", "exact_gamma_d", "exhaustive_gamma_d",
    "min_norm_point", "reference_train",
    "ActiveSets", "RunResult", "build_active_sets", "count_margin_errors",
    "train",
    "McpsStep", "mpcs_apply", "mpcs_condition", "mpcs_max_multiplicity",
    "mpcs_step", "mpvs_apply", "mpvs_condition", "mpvs_max_multiplicity",
    "perceptron_apply", "perceptron_condition", "perceptron_max_multiplicity",
]
