"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid user-supplied data: bad files, out-of-range values, shape mismatches."""


class NumericalError(RuntimeError):
    """A linear-algebra step failed: non-positive-definite matrix, bad conditional variance."""


class SingularSystemError(NumericalError):
    """A kriging system is exactly singular, e.g. duplicated noise-free observations."""
