"""Exception hierarchy shared by all nlevel modules."""


class NLevelError(Exception):
    """Base class for all errors raised by this package."""


class NotHermitian(NLevelError):
    """Matrix asymmetry exceeds the hermiticity tolerance."""


class NotPositive(NLevelError):
    """Matrix has an eigenvalue below the allowed negative floor."""


class NearSingular(NLevelError):
    """Smallest singular value is below the singularity tolerance."""

    def __init__(self, message: str, sigma_min: float | None = None):
        super().__init__(message)
        self.sigma_min = sigma_min


class NotUnitary(NLevelError):
    """Matrix fails the unitarity check."""


class DimensionMismatch(NLevelError):
    """Array shape is inconsistent with the declared partition."""


class ChartBreakdown(NLevelError):
    """The A or D block is near-singular: the single-chart coset
    parametrization is not valid at this group element."""

    def __init__(self, message: str, sigma_min: float | None = None):
        super().__init__(message)
        self.sigma_min = sigma_min


class NonHermitianSample(NLevelError):
    """A Hamiltonian evaluator returned a non-Hermitian sample."""


class NotNormalized(NLevelError):
    """State vector norm deviates from 1 beyond tolerance."""


class NonRealResult(NLevelError):
    """A quantity that must be real carries a significant imaginary part,
    indicating corrupted inputs."""


class UndefinedPhase(NLevelError):
    """Endpoint states are orthogonal: the total phase is undefined."""


class NotClosed(NLevelError):
    """Curve endpoints do not coincide; a closed loop is required."""


class ConsistencyError(NLevelError):
    """A built-in redundant cross-check disagreed beyond its tolerance."""


class ScenarioParseError(NLevelError):
    """Scenario document is not well-formed."""


class ScenarioValidationError(NLevelError):
    """Scenario document is well-formed but semantically invalid.

    Carries a list of (key path, message) pairs.
    """

    def __init__(self, issues: list[tuple[str, str]]):
        lines = "; ".join(f"{path}: {msg}" for path, msg in issues)
        super().__init__(lines)
        self.issues = list(issues)
