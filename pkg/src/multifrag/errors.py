"""Exception types shared across the package."""


class MultifragError(Exception):
    """Base class for all multifrag errors."""


# --- typed partition construction -------------------------------------------

class NegativeMass(MultifragError):
    pass


class TypeOutOfRange(MultifragError):
    pass


class MassSumExceedsOne(MultifragError):
    pass


class ZeroMassWithNonzeroType(MultifragError):
    pass


class EmptyGroundSet(MultifragError):
    pass


class GroundSizeMismatch(MultifragError):
    pass


class GroundSizeTooSmall(MultifragError):
    pass


# --- model specification ------------------------------------------------------

class SpecValidationError(MultifragError):
    """Carries every violation found, not just the first.

    Each violation is a (code, message) pair; codes are stable strings
    such as "AtomAtUnit" or "NonConservativeAtom".
    """

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(f"{code}: {msg}" for code, msg in self.violations)
        super().__init__(f"invalid fragmentation spec ({lines})")

    def codes(self):
        return [code for code, _ in self.violations]


class NotConservative(MultifragError):
    pass


class ThetaOutOfDomain(MultifragError):
    pass


class DistinctErosionCoefficients(MultifragError):
    pass


# --- spectral computations ----------------------------------------------------

class NormTooLarge(MultifragError):
    pass


class NotIrreducible(MultifragError):
    pass


class NoConvergence(MultifragError):
    pass


class StencilOutOfDomain(MultifragError):
    pass


class MaximumAtBracketEdge(MultifragError):
    pass


class NotUnimodal(MultifragError):
    pass


# --- statistics ---------------------------------------------------------------

class InvalidWindow(MultifragError):
    pass


# --- driver -------------------------------------------------------------------

class ParseError(MultifragError):
    pass


class ResourceCapExceeded(MultifragError):
    pass


# --- warnings -----------------------------------------------------------------

class ThetaAboveCritical(UserWarning):
    """theta >= theta_bar: the additive martingale may degenerate."""


class LatticeJumpSizes(UserWarning):
    """All log-mass jump sizes look commensurable; sharp count asymptotics
    assume a non-lattice walk."""
