"""Exception taxonomy shared across the package."""


class RSRError(Exception):
    """Base class for all rsrforge errors."""


class RationalOverflow(RSRError):
    """Exact rational arithmetic exceeded the checked 128-bit integer range."""


class DomainError(RSRError):
    """Evaluation left the mathematical domain (log of a nonpositive value,
    division by zero, even root of a negative, pole of tan/gamma, ...)."""


class UnboundSymbol(RSRError):
    """An expression references a variable or function symbol the
    environment does not bind."""


class NonRationalStructure(RSRError):
    """simplify_rational met a node it cannot treat as a rational operation
    or opaque atom."""


class ParseError(RSRError):
    """Expression text does not conform to the grammar.

    Carries the 0-based character position of the offending token.
    """

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class CombinatorialBlowup(RSRError):
    """Monomial enumeration would exceed the configured cap."""


class SamplingExhausted(RSRError):
    """Too many consecutive rejected draws; the sampling box is not
    usefully contained in the oracle's domain."""


class TooFewRows(RSRError):
    """Not enough rows for the requested split or fold count."""


class NoSparseModel(RSRError):
    """The full regression model already misses the error bound, so no
    sparsification can succeed."""


class SingularDesign(RSRError):
    """Design matrix has rank zero."""


class SearchSpaceTooLarge(RSRError):
    """Bounded integer-coefficient search was asked for an instance beyond
    its exhaustive-scale limits."""


class UnknownSeries(RSRError):
    """No truncated-series program is registered under that name."""


class NotSolvable(RSRError):
    """The identity cannot be solved for f(x) as a rational expression."""
