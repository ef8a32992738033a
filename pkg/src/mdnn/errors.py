"""Exception types raised across the package."""


class MdnnError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(MdnnError, ValueError):
    """An array has the wrong rank or incompatible dimensions."""


class DegenerateBatchError(MdnnError, ValueError):
    """A batch is too small for the requested statistic (fewer than 2 samples)."""


class DegenerateLabelsError(MdnnError, ValueError):
    """A labeled batch does not contain at least two classes."""


class NotSpdError(MdnnError, ValueError):
    """A matrix required to be symmetric positive definite has a clearly negative eigenvalue."""


class ConfigError(MdnnError, ValueError):
    """Invalid training or sampling configuration."""


class NonFiniteGradientError(MdnnError, FloatingPointError):
    """A gradient contained NaN or Inf; the current epoch is aborted."""


class DatasetFormatError(MdnnError, ValueError):
    """A dataset file is malformed, truncated, or fails validation."""


class CheckpointError(MdnnError, ValueError):
    """A model checkpoint is malformed or of an unsupported version."""
