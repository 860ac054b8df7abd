"""Typed errors raised across the package."""


class ToricError(Exception):
    """Base class for all package errors."""


class FanError(ToricError, ValueError):
    pass


class NonSimplicialCone(FanError):
    pass


class NonConvexPsi(FanError):
    pass


class DegreeNotOne(FanError):
    pass


class OverlappingCones(FanError):
    pass


class PointOutsideCone(ToricError, ValueError):
    pass


class DegenerateIndexSet(ToricError, ValueError):
    pass


class NotACone(ToricError, ValueError):
    pass


class UnboundedPolytope(ToricError, ValueError):
    pass


class PolygammaAtNonpositiveInteger(ToricError, ValueError):
    pass


class ClassNotInK0(ToricError, ValueError):
    pass


class ClassNotInK0c(ToricError, ValueError):
    pass


class SectorMismatch(ToricError, ValueError):
    pass


class DivergenceSuspected(ToricError, RuntimeError):
    pass


class CompactFactorNotCancelled(ToricError, RuntimeError):
    pass


class NotConvergent(ToricError, ValueError):
    pass


class ToleranceNotReached(ToricError, RuntimeError):
    pass


class NotEligible(ToricError, ValueError):
    pass


class NonGenericV(ToricError, ValueError):
    pass


class MissingEntry(ToricError, KeyError):
    pass


class FormulaInapplicable(ToricError, ValueError):
    pass


class FanParseError(ToricError, ValueError):
    pass
