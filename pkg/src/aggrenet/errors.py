"""Exception types shared across the toolkit.

Parse errors carry the 1-based line number of the offending input line so
that malformed files fail loudly and point at the problem.
"""


class AggrenetError(Exception):
    """Base class for all domain errors raised by this package."""


class ParseError(AggrenetError):
    """Malformed input text. ``line_no`` is 1-based."""

    def __init__(self, line_no, message):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class MalformedHeader(ParseError):
    pass


class FieldCount(ParseError):
    pass


class NonNumericField(ParseError):
    pass


class CountMismatch(ParseError):
    pass


class SelfLoop(ParseError):
    pass


class NonPositiveDemand(ParseError):
    pass


class InvalidInstance(AggrenetError):
    """Instance data violates an invariant outside of a parsing context."""


class InfeasibleParameters(AggrenetError):
    """Random generation could not satisfy the requested reachability."""


class Unreachable(AggrenetError):
    """No path exists between the requested endpoints.

    ``commodity`` is set when the failure was triggered while routing a
    specific commodity, else None.
    """

    def __init__(self, origin, destination, commodity=None):
        self.origin = origin
        self.destination = destination
        self.commodity = commodity
        who = f" for commodity {commodity + 1}" if commodity is not None else ""
        super().__init__(
            f"no path from node {origin + 1} to node {destination + 1}{who}"
        )


class InvalidAggregation(AggrenetError):
    """A partial aggregation failed validation before model building."""

    def __init__(self, report):
        self.report = report
        super().__init__(
            "invalid aggregation: " + "; ".join(e.code for e in report.entries)
        )


class ModelError(AggrenetError):
    """Inconsistent model construction (duplicate names, unknown variables)."""


class AggregationMismatch(AggrenetError):
    """A solution mapping received an aggregation that does not cover the
    instance's commodities."""


class MpsParseError(ParseError):
    pass


class MissingVariable(AggrenetError):
    """An assignment to check does not cover every model variable."""


class NonPositiveBase(AggrenetError):
    """Percentage metrics need a positive baseline value."""


class NumericalInstability(AggrenetError):
    """The simplex engine lost too much accuracy to continue."""


class TooLarge(AggrenetError):
    """Problem exceeds the hard size limit of an exhaustive routine."""
