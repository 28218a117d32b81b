"""Exception types raised across the package."""


class TokenPropError(Exception):
    """Base class for all package errors."""


class DegreeViolation(TokenPropError):
    """A variable touches fewer than two constraints."""


class MalformedClause(TokenPropError):
    pass


class MalformedEdge(TokenPropError):
    pass


class MalformedHeader(TokenPropError):
    pass


class ScopeError(TokenPropError):
    """A rectangle or message set does not match the expected scope."""


class BudgetExceeded(TokenPropError):
    """An exhaustive enumeration would exceed its configured budget."""


class IncompleteAssignment(TokenPropError):
    pass


class InitError(TokenPropError):
    pass


class ParamError(TokenPropError):
    pass


class DegenerateMessage(TokenPropError):
    """All mass of a message was dropped, so it cannot be normalized."""

    def __init__(self, msg, edge=None):
        super().__init__(msg if edge is None else f"{msg} (edge {edge})")
        self.edge = edge


class NoPolarizedVariable(TokenPropError):
    pass


class Contradiction(TokenPropError):
    """Simplification emptied a constraint's satisfying set."""
