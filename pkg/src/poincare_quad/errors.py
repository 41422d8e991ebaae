"""Exception hierarchy shared by all modules."""


class PoincareQuadError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(PoincareQuadError, ValueError):
    """Invalid user-supplied parameters."""


class NumericalError(PoincareQuadError, ArithmeticError):
    """A numerical stage failed to meet its contract."""


# measures
class BadInterval(ConfigError):
    pass


class NonPositiveDensity(ConfigError):
    pass


# spectral
class MeshTooCoarse(ConfigError):
    pass


class NumericalBreakdown(NumericalError):
    pass


class IndexOutOfRange(ConfigError, IndexError):
    pass


# kernel
class DuplicateNodes(ConfigError):
    pass


class TooManyNodesForTruncation(ConfigError):
    pass


class SingularGram(NumericalError):
    pass


class InsufficientBasis(ConfigError):
    pass


# quadrature
class Infeasible(NumericalError):
    pass


class Unbounded(NumericalError):
    pass


class TooFewSupportPoints(NumericalError):
    pass


class DidNotConverge(NumericalError):
    pass


class WrongOrder(NumericalError):
    pass


class WrongRootCount(NumericalError):
    pass


class InvalidRule(NumericalError):
    """A computed rule violates its invariants (sum, interiority, exactness)."""


# quantize
class MomentBreakdown(NumericalError):
    pass


# randdens
class FactorizationFailure(NumericalError):
    pass


class RejectionLimit(NumericalError):
    pass
