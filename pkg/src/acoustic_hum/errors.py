"""Exception hierarchy.

Every error carries a ``category`` string and the CLI exit code it maps to:
2 for configuration problems, 3 for violated hypotheses, 4 for numerical
failures.
"""


class ArtifactError(Exception):
    category = "error"
    exit_code = 4


class ConfigError(ArtifactError):
    category = "config"
    exit_code = 2


class GeometryError(ArtifactError):
    category = "geometry"
    exit_code = 2


class ResolutionError(GeometryError):
    category = "resolution"


class SpecError(ArtifactError):
    category = "spec"
    exit_code = 2


class X0PlacementError(ArtifactError):
    category = "hypothesis"
    exit_code = 3


class IncompatibleCoefficients(ArtifactError):
    category = "hypothesis"
    exit_code = 3


class CompatibilityError(ArtifactError):
    """Discrete Neumann data inconsistent with the source term."""

    category = "numerical"


class CFLError(ArtifactError):
    category = "numerical"


class NonFiniteError(ArtifactError):
    category = "numerical"


class DimensionError(ArtifactError):
    category = "dimension"
    exit_code = 2


class LengthMismatch(ArtifactError):
    category = "numerical"


class MissingC2(ArtifactError):
    category = "config"
    exit_code = 2


class NoConvergence(ArtifactError):
    category = "numerical"

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
