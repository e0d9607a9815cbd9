"""Exception types shared across the package."""


class SchemaError(ValueError):
    """An input file or column mapping does not match the expected schema."""


class DataError(ValueError):
    """Input data is empty, degenerate, or violates an operation's preconditions."""
