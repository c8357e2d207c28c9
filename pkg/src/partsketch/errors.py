"""Exception types shared across the package."""


class PartSketchError(Exception):
    """Base class for all package errors."""


class DatasetError(PartSketchError):
    """Raised when a manifest or mesh file is invalid or inconsistent."""


class IndexError_(PartSketchError):
    """Raised when an index file is missing, stale, or incomplete."""


class QueryError(PartSketchError):
    """Raised for invalid retrieval queries (unknown category, bad lambdas...)."""


class SessionError(PartSketchError):
    """Raised for invalid design-session operations."""
