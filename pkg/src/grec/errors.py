"""Shared exception types."""


class DataError(Exception):
    """An input file or payload violates its documented format or contract."""
