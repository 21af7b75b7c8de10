"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid user input: malformed data, bad parameters, inconsistent config."""


class NumericalError(ArithmeticError):
    """A linear-algebra kernel failed or produced a value outside its domain."""
