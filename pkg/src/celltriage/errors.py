"""Exception types shared across the pipeline."""


class DomainError(ValueError):
    """An operation was called outside its mathematical domain."""


class InputError(Exception):
    """The input source cannot be read or lacks mandatory structure."""


class ConsistencyError(Exception):
    """Pipeline stages were computed over different record sets."""
