"""Exception types shared across the package.

ValueError is used for contract violations (bad parameters, malformed
inputs).  NumericalError marks failures that arise during computation on
inputs that passed validation, so callers can map the two onto different
exit codes.
"""


class NumericalError(RuntimeError):
    """A numerical procedure failed on structurally valid input."""
