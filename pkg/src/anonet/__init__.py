"""Computation in anonymous networks: fibrations, view-based static algorithms and Push-Sum."""

from .engine import AlgorithmDescriptor, ExecutionTrace, Model, ModelError, check_model_discipline, converged, run
from .fibration import Fibration, GraphMorphism, is_covering, is_fibration, minimum_base, ring_fibration
from .functions import CATALOG, FrequencyFunction, TargetFunction, frequency_of, parse_function, quot_sum
from .graph import DirectedMultigraph, DynamicGraph, GraphError, dynamic_diameter, generate
from .linalg import KernelError, build_M, dobrushin, kernel_generator
from .pushsum import convergence_bound, make_frequency_pushsum, make_pushsum
from .static_algo import Help, make_static_algorithm, reconstruct_base_from_view

__version__ = "0.1.0"
