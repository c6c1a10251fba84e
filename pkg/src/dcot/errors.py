"""Exception hierarchy shared by every module."""


class DCOTError(Exception):
    """Base class for all errors raised by the package."""


class ConfigError(DCOTError, ValueError):
    """Invalid configuration, spec or CLI input."""


class NumericalError(DCOTError, ArithmeticError):
    """A numerical routine left its valid domain."""


class DimMismatch(DCOTError, ValueError):
    pass


class ZeroRow(DCOTError, ValueError):
    def __init__(self, index):
        super().__init__(f"row {index} has (near) zero norm")
        self.index = index


class OutOfRange(DCOTError, ValueError):
    pass


class TooLarge(DCOTError, ValueError):
    pass


class NonFiniteIterate(NumericalError):
    """A Sinkhorn scaling vector left (0, inf); usually reg is too large for the cost scale."""


class BatchTooSmall(DCOTError, ValueError):
    pass


class InvalidSpec(ConfigError):
    pass


class InvalidBatchSize(ConfigError):
    pass


class IndexOutOfRange(DCOTError, IndexError):
    pass


class SingleClass(DCOTError, ValueError):
    pass


class EmptySweep(ConfigError):
    pass
