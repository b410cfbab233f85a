"""Exception hierarchy shared across the package."""


class AdvosError(Exception):
    pass


class ConfigurationError(AdvosError, ValueError):
    """Invalid configuration, shapes or hyperparameters."""


class ContractError(AdvosError, ValueError):
    """A caller violated an operation's precondition."""


class NumericError(AdvosError, FloatingPointError):
    """A NaN or infinity surfaced in a forward value or loss."""


class UnsupportedOpError(AdvosError, NotImplementedError):
    """An op without a second-order rule sits on a create_graph path."""


class IngestionError(AdvosError):
    pass


class ImputationError(AdvosError):
    pass


class SplitError(AdvosError):
    pass


class NotApplicableError(AdvosError):
    """The method cannot run on this dataset (reported as NA)."""


class MetricError(AdvosError, ValueError):
    pass
