"""Exception hierarchy shared across the package."""
from __future__ import annotations


class CodedShuffleError(Exception):
    """Base class for all errors raised by this package."""


class DivisibilityError(CodedShuffleError):
    """A parameter combination violates an integrality constraint.

    Carries the full list of violated constraints so callers can report
    every problem at once instead of fixing them one by one.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class InfeasibleParams(CodedShuffleError):
    """A formula was evaluated outside its feasible parameter region."""


class Infeasible(CodedShuffleError):
    """The optimizer found no feasible operating point."""


class UndefinedLoad(CodedShuffleError):
    """The shuffle-load formula is undefined (r1 = 0 with s = 1)."""


class UnsupportedReplication(CodedShuffleError):
    """Closed-form shortcut only derived for reduce replication s = 1."""


class EmptyInput(CodedShuffleError):
    """An envelope was requested for an empty point set."""


class FieldTooSmall(CodedShuffleError):
    """The Galois field cannot supply enough distinct coefficients."""


class DuplicateCoefficient(CodedShuffleError):
    """Encoding coefficients must be pairwise distinct."""


class SingularMatrix(CodedShuffleError):
    """A decode matrix was singular; indicates an internal invariant bug."""


class CountMismatch(CodedShuffleError):
    """Known/unknown symbol counts do not line up with the coded rows."""


class DecodeFailure(CodedShuffleError):
    """A receiver could not reconstruct the symbols it was promised."""


class MissingValue(CodedShuffleError):
    """A reducer is missing an intermediate value after the shuffle."""


class PayloadMismatch(CodedShuffleError):
    """A delivered intermediate value disagrees with its recomputation."""


class AssignmentNotSymmetric(CodedShuffleError):
    """Reduce assignment is not weakly symmetric (even batches per subset)."""
