"""Approximate graph pattern mining: exact search, neighbor sampling, sparsification."""

from ._accel import NUMBA_ENABLED
from .cost import (CostCone, Decision, GsCostEstimate, HardwareProfile, ProfileResult,
                   calibrate_hardware, calibrate_hardware_constant, fast_profile,
                   gs_cost_estimate, ns_cost_cone, run_loose, select_scheme)
from .errors import (AgpmError, GraphFormatError, OracleRefusal, ParameterError,
                     PatternLookupError, UnsupportedError)
from .exact import ExactCountResult, brute_force_count, exact_count
from .graph import (ColoredCsr, CsrGraph, bernoulli_sparsify, color_vertices, from_edges,
                    load_binary, load_edge_list, load_graph, merge_colors, orient_by_degree,
                    save_binary, sparsified_view)
from .gs import (GsEstimate, ReadKBoundInputs, Scheme, SparsifyParams,
                 choose_keep_probability, estimate_gamma, gs_estimate)
from .pattern import (BUILTIN_NAMES, ExecutionPlan, Induced, Pattern, VerifyMode,
                      builtin_pattern, compile_plan, parse_pattern)
from .sampling import (ConvergenceReport, SampleAccumulator, WindowPolicy, inv_norm_cdf,
                       predicted_error, run_ns_online)

__version__ = "0.1.0"
