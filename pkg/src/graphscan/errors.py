"""Exception hierarchy shared by all graphscan modules."""


class GraphScanError(Exception):
    """Base class for all errors raised by this package."""


class GraphFormatError(GraphScanError):
    """Unparseable or malformed graph/attribute input."""


class ValidationError(GraphScanError):
    """Inputs that parse but violate a documented precondition."""


class FamilyError(GraphScanError):
    """Neighborhood family could not be constructed."""
