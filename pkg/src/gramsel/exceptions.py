"""Exception hierarchy.

Two families, mirrored by the CLI exit codes: input/usage problems are
``ValueError`` subclasses (exit code 2), numerical failures are
``RuntimeError`` subclasses (exit code 3).  Everything derives from
:class:`GramselError` so callers can catch library errors in one clause.
"""


class GramselError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(GramselError, ValueError):
    """Operand shapes are inconsistent (non-square, mismatched sizes, ...)."""


class DomainError(GramselError, ValueError):
    """A value is outside its admissible domain (negative horizon, bad k, ...)."""


class NonFiniteError(GramselError, ValueError):
    """An input contains NaN or infinite entries."""


class ProblemFormatError(GramselError, ValueError):
    """A problem file could not be parsed or is missing required fields."""


class TopologyError(GramselError, ValueError):
    """A grid description is structurally invalid (disconnected, self-loop, ...)."""


class EnumerationCapError(GramselError, ValueError):
    """Exhaustive search refused because the subset count exceeds the cap."""

    def __init__(self, n_candidates, k, count, cap):
        self.n_candidates = int(n_candidates)
        self.k = int(k)
        self.count = int(count)
        self.cap = int(cap)
        super().__init__(
            f"refusing exhaustive search over C({self.n_candidates}, {self.k}) "
            f"= {self.count} ({self.count:.3e}) subsets; cap is {self.cap}"
        )


class NumericalError(GramselError, RuntimeError):
    """A numerical routine failed (non-convergence, overflow, ...)."""


class StabilityError(NumericalError):
    """The dynamics matrix is not Hurwitz where stability is required."""

    def __init__(self, message, max_real_part=None):
        self.max_real_part = max_real_part
        super().__init__(message)


class SingularGramianError(NumericalError):
    """A Gramian that must be positive definite is singular to working precision."""

    def __init__(self, message, eigenvalue=None):
        self.eigenvalue = eigenvalue
        super().__init__(message)


class UnreachableStateError(NumericalError):
    """The requested target state lies outside the range of the Gramian."""


class DegenerateGramianWarning(UserWarning):
    """A singular but consistent system was solved via the pseudo-inverse."""
