"""Exception types raised across walklab."""


class WalklabError(Exception):
    """Base class for all walklab errors."""


class NonStochasticRow(WalklabError, ValueError):
    pass


class NotIrreducible(WalklabError, ValueError):
    pass


class ConvergenceFailure(WalklabError, RuntimeError):
    pass


class AlphaOutOfRange(WalklabError, ValueError):
    pass


class DegenerateSpectrum(WalklabError):
    """All singular values of the discriminant equal 1; no phase gap exists."""


class PropositionViolation(WalklabError, AssertionError):
    pass


class CorrespondenceViolation(WalklabError, AssertionError):
    pass


class DimensionCap(WalklabError, MemoryError):
    pass


class DimensionMismatch(WalklabError, ValueError):
    pass


class GammaOutOfRange(WalklabError, ValueError):
    pass


class DepthCap(WalklabError):
    pass


class RecursionMismatch(WalklabError, AssertionError):
    pass


class ParamError(WalklabError, ValueError):
    pass
