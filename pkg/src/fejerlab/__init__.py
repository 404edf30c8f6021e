"""Approximate-identity convolution on concrete locally compact groups.

Kernels, local partitions and a quadrature-backed convolution engine, with a
harness that compares ``F_theta * f(x)`` against the partition-weighted
combination of directional limits.
"""
from .convolution import (CellFace, ConvolutionProblem, Hyperplane, TargetFunction, cellwise,
                          constant, convolve, directional_limit, directional_limits, harmonic,
                          interval_indicator, predicted_limit, quadrant_step, sin_oscillation,
                          step, target_from_token)
from .errors import (ConfigurationError, FejerlabError, InvalidPointError, ParamError,
                     PartitionError, QuadratureError)
from .experiments import (ConvergenceReport, SweepSpec, emit_report, fit_order,
                          lebesgue_point_check, parse_report, run_convergence)
from .fourier import cesaro_mean, fourier_coeff, fourier_coefficients, partial_sum
from .groups import GroupChart, GroupKind, axb, euclidean, group_from_token, heisenberg, torus
from .kernels import KernelFamily, KernelKind, family_from_token, verify_approximate_identity
from .partitions import (LocalPartition, masses_converge, partition_from_token,
                         partition_masses, standard_partition, validate_partition)
from .quadrature import Estimate, QuadratureSpec, integrate_box

__version__ = "0.1.0"
