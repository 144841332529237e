"""Simultaneous boundary control of two coupled acoustic systems in layered media.

Staggered finite-difference solvers for the pressure/velocity systems with
transmission conditions, the HUM Gramian with conjugate-gradient inversion,
multiplier-based observability diagnostics and an experiment CLI.
"""

__version__ = "0.1.0"

from .coefficients import MediumCoefficients, validate_all, validate_compatibility, validate_monotonicity
from .errors import (ArtifactError, CFLError, CompatibilityError, ConfigError, DimensionError, GeometryError,
                     IncompatibleCoefficients, LengthMismatch, MissingC2, NoConvergence, NonFiniteError,
                     ResolutionError, SpecError, X0PlacementError)
from .grid import GeometrySpec, LayeredGrid, build_layered_grid, layer_crossing_time
from .hum import ControlReport, HUMController, HUMVector, apply_gramian, solve_control, synthesize_controls, y_inner
from .multiplier import MultiplierData, build_h, check_geometry, estimate_mu, solve_phi
from .observability import (ObservabilityReport, interface_flux_check, multiplier_identity_residual,
                            observability_quotient, observation_functional, paper_constants)
from .solver import AcousticField, AcousticSolver, BoundaryTraceSet, ControlSignal, energy, evolve, step

__all__ = [n for n in dir() if not n.startswith("_")]
