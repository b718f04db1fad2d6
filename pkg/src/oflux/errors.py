"""Exception types shared by every module."""


class DomainError(ValueError):
    """Input lies outside the domain where an operation is defined."""


class ShapeError(ValueError):
    """Arrays or grids do not match."""
