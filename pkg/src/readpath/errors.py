"""Shared exception types."""


class InputError(Exception):
    """Bad user-supplied data or configuration (manifest rows, missing files,
    infeasible constraints). The CLI maps these to exit status 1; anything
    else that escapes is treated as an internal failure (exit status 2)."""
