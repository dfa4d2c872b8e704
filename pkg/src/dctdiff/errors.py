"""Exception types mapped to CLI exit codes."""


class UsageError(Exception):
    """Bad arguments or configuration (exit code 1)."""


class DataError(Exception):
    """Malformed or inconsistent input data (exit code 2)."""


class NumericalError(Exception):
    """Numerical failure such as divergence or non-finite values (exit code 3)."""
