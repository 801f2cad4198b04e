"""Surrogate-based global optimization of expensive black-box functions.

The optimizer fits a radial basis function interpolant to all evaluated
points, proposes the next point by cyclically trading predicted value
against distance from known points, and can run evaluations asynchronously
on several workers.  Box-constrained continuous and integer variables are
supported directly; hyperparameter spaces (log-scale, categorical,
variable-depth layered architectures) are encoded onto the box.
"""

from .core import (BoxDomain, ContractError, DomainError, EvalKind,
                   EvalRecord, NodeSet, ObjectiveSense, RngStream,
                   min_scaled_distance, scale_to_unit, snap_integers, unscale)
from .design import DesignError, InitialDesign, latin_hypercube
from .surrogate import (DEFAULT_KERNEL, KERNELS, FitError, RbfModel, fit,
                        kernel_value, predict, predict_batch)
from .proposer import (DEFAULT_WEIGHTS, GaConfig, Proposal, ProposerError,
                       WeightCycle, ga_argmax, min_separation, propose,
                       propose_with_weight, score)
from .engine import (Budget, EngineError, OptimizationResult, OptimizerConfig,
                     StopReason, best_so_far_trace, optimize, penalty_value)
from .scheduler import (SchedulerError, SchedulerState, Task, TempNode,
                        audit_events, run_parallel)
from .hpo import (HpoSpace, LayeredGroup, ParamSpec, SpaceError, decode,
                  expected_decoded_cost, to_domain)
from .testfuncs import (TestFunction, UnknownFunctionError, default_suite,
                        get_function, list_functions)
from .stats import (CHI2_CRIT_95, average_ranks, count_better_matrix,
                    friedman, friedman_from_values)
from .protocol import (ExternalEvaluator, ExternalObjective, ProtocolError,
                       evaluate_external, params_for_point)
from .logs import (read_jsonl, replay_best_trace, result_log_lines,
                   strip_timing, write_event_log, write_result_log)
from .bench import (BenchError, BenchSpec, ComparisonReport, is_solved,
                    random_search, run_bench, with_simulated_latency)
from .config import ConfigError, RunConfig, load_config, parse_config

__version__ = "0.1.0"

__all__ = [
    "BoxDomain", "ContractError", "DomainError", "EvalKind", "EvalRecord",
    "NodeSet", "ObjectiveSense", "RngStream", "min_scaled_distance",
    "scale_to_unit", "snap_integers", "unscale",
    "DesignError", "InitialDesign", "latin_hypercube",
    "DEFAULT_KERNEL", "KERNELS", "FitError", "RbfModel", "fit",
    "kernel_value", "predict", "predict_batch",
    "DEFAULT_WEIGHTS", "GaConfig", "Proposal", "ProposerError", "WeightCycle",
    "ga_argmax", "min_separation", "propose", "propose_with_weight", "score",
    "Budget", "EngineError", "OptimizationResult", "OptimizerConfig",
    "StopReason", "best_so_far_trace", "optimize", "penalty_value",
    "SchedulerError", "SchedulerState", "Task", "TempNode", "audit_events",
    "run_parallel",
    "HpoSpace", "LayeredGroup", "ParamSpec", "SpaceError", "decode",
    "expected_decoded_cost", "to_domain",
    "TestFunction", "UnknownFunctionError", "default_suite", "get_function",
    "list_functions",
    "CHI2_CRIT_95", "average_ranks", "count_better_matrix", "friedman",
    "friedman_from_values",
    "ExternalEvaluator", "ExternalObjective", "ProtocolError",
    "evaluate_external", "params_for_point",
    "read_jsonl", "replay_best_trace", "result_log_lines", "strip_timing",
    "write_event_log", "write_result_log",
    "BenchError", "BenchSpec", "ComparisonReport", "is_solved",
    "random_search", "run_bench", "with_simulated_latency",
    "ConfigError", "RunConfig", "load_config", "parse_config",
    "__version__",
]
