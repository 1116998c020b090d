class HetcalError(Exception):
    """Base class for all errors raised by hetcal."""


class ConfigError(HetcalError, ValueError):
    """Invalid parameter or configuration value."""


class SchemaError(HetcalError, ValueError):
    """Malformed or incompatible serialized document."""


class AnalysisError(HetcalError):
    """The calibration pipeline cannot produce a trustworthy result."""


class InsufficientSNRError(AnalysisError):
    pass


class UnphysicalEfficiencyError(AnalysisError):
    pass
