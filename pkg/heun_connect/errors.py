"""Exception hierarchy for heun-connect.

Every error carries the process exit code the CLI reports for it:

    2  parse / invalid input
    3  degeneracy (coincident points, integer exponent difference, ...)
    4  domain violation (outside a disc, on a branch cut, failed condition)
    5  non-convergence
"""

from __future__ import annotations


class HeunConnectError(Exception):
    exit_code = 1


class ParseError(HeunConnectError, ValueError):
    exit_code = 2


class DegeneracyError(HeunConnectError, ValueError):
    exit_code = 3


class DomainViolation(HeunConnectError, ValueError):
    exit_code = 4


class ConvergenceFailure(HeunConnectError, ArithmeticError):
    exit_code = 5


# geometry
class Coincident(DegeneracyError):
    pass


class Collinear(DegeneracyError):
    pass


class DegenerateTriple(DegeneracyError):
    pass


class DegeneratePoints(DegeneracyError):
    pass


class DegenerateAngles(DegeneracyError):
    pass


class SingularMap(DegeneracyError):
    pass


# series
class DegenerateExponents(DegeneracyError):
    pass


class DegenerateConfig(DegeneracyError):
    pass


class CenterIsSingular(DegeneracyError):
    pass


class OutsideDisc(DomainViolation):
    pass


class OnBranchCut(DomainViolation):
    pass


class PathTooCloseToSingularity(DomainViolation):
    pass


class MismatchedCenters(DomainViolation):
    pass


class NotConverged(ConvergenceFailure):
    pass


class StepUnderflow(ConvergenceFailure):
    pass


# connection
class PointOutsideDisc(DomainViolation):
    pass


class SingularDenominator(DegeneracyError):
    pass


class ConventionMismatch(DomainViolation):
    pass


class CenterOutsideDiscs(DomainViolation):
    pass


class NoChain(DomainViolation):
    pass


class ConditionViolated(DomainViolation):
    """A feasibility condition ("A", "B" or "discs") does not hold."""

    def __init__(self, condition: str, message: str | None = None) -> None:
        self.condition = condition
        super().__init__(message or f"Condition {condition} is violated")


# regions
class DegenerateA(DegeneracyError):
    pass
