"""
Diamond-scheme multisymplectic Runge-Kutta integrator for wave equations in
one space dimension.
"""

import logging

from .boundary import BoundarySolver, BoundarySpec, boundary_spec, periodic_wrap, solve_boundary_diamond
from .core import (Corners, DiamondSolution, MeshConfig, PDESystem, SolverConfig, StageBlock, StageConstraint,
                   StageSolver, TransformedCoeffs, corner_values, diamond_coordinates, solve_diamond,
                   solve_diamonds, stage_residuals, transform_coeffs)
from .diagnostics import (ErrorTable, OrderFit, Variation, conservation_residual, error_norm, fit_order,
                          random_variation, variation_pair)
from .errors import (AbortedRunError, DiamondError, InvalidArgumentError, InvalidStateError,
                     SingularSystemError, SolverDivergenceError, UnsupportedOperationError)
from .initialization import INIT_METHODS, ZigZagState, init_diamond, init_exact, init_phantom, initialize
from .parallel import Partition, SpeedupModel, fit_serial_fraction, parallel_run, partition
from .problems import WaveProblem, make_wave_problem, problem_names, sample_problem, wave_system
from .tableau import RKTableau, gauss_tableau
from .timeloop import DiamondIntegrator, RunReport, half_step, run

logging.getLogger(__name__).addHandler(logging.NullHandler())

__version__ = "0.1.0"

__all__ = [
    "AbortedRunError", "BoundarySolver", "BoundarySpec", "Corners", "DiamondError", "DiamondIntegrator",
    "DiamondSolution", "ErrorTable", "INIT_METHODS", "InvalidArgumentError", "InvalidStateError", "MeshConfig",
    "OrderFit", "PDESystem", "Partition", "RKTableau", "RunReport", "SingularSystemError", "SolverConfig",
    "SolverDivergenceError", "SpeedupModel", "StageBlock", "StageConstraint", "StageSolver",
    "TransformedCoeffs", "UnsupportedOperationError", "Variation", "WaveProblem", "ZigZagState",
    "boundary_spec", "conservation_residual", "corner_values", "diamond_coordinates", "error_norm",
    "fit_order", "fit_serial_fraction", "gauss_tableau", "half_step", "init_diamond", "init_exact",
    "init_phantom", "initialize", "make_wave_problem", "parallel_run", "partition", "periodic_wrap",
    "problem_names", "random_variation", "run", "sample_problem", "solve_boundary_diamond", "solve_diamond",
    "solve_diamonds", "stage_residuals", "transform_coeffs", "variation_pair", "wave_system",
]
