class ReconNetError(Exception):
    """Base class for every failure raised by this package."""


class ConfigurationError(ReconNetError, ValueError):
    """Shapes, lengths or artifacts that do not fit together."""


class FormatError(ReconNetError, ValueError):
    """A binary or image file that cannot be decoded.

    Args:
        message (str): what went wrong.
        offset (int): byte offset where decoding failed, if known.
        field (str): name of the header field or section being read, if known.
    """

    def __init__(self, message, offset=None, field=None):
        details = []
        if field is not None:
            details.append("field '{}'".format(field))
        if offset is not None:
            details.append("byte offset {}".format(offset))
        if details:
            message = "{} ({})".format(message, ", ".join(details))
        super(FormatError, self).__init__(message)
        self.offset = offset
        self.field = field


class StateError(ReconNetError, RuntimeError):
    """Operation called in the wrong order, e.g. backward before forward."""


class SolverError(ReconNetError, RuntimeError):
    """Iterative solver produced a non-finite iterate."""


class DivergenceError(ReconNetError, RuntimeError):
    """Training produced a non-finite loss or gradient."""

    def __init__(self, message, layer=None):
        if layer is not None:
            message = "{} in layer '{}'".format(message, layer)
        super(DivergenceError, self).__init__(message)
        self.layer = layer


class SearchError(ReconNetError, RuntimeError):
    """Every learning-rate candidate diverged."""
