"""Exception hierarchy shared by all raindet modules."""


class RaindetError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(RaindetError, ValueError):
    """A numeric parameter is outside its allowed domain (even kernel size, t outside [0,1], ...)."""


class DimensionError(RaindetError, ValueError):
    """Two rasters that must agree in shape do not."""


class InputError(RaindetError, ValueError):
    """Input data is structurally unusable (empty sequence, too few frames, ...)."""


class ValidationError(RaindetError, ValueError):
    """A parsed document or manifest violates its schema."""


class AnnotationParseError(ValidationError):
    """Annotation JSON could not be decoded."""

    def __init__(self, msg, lineno=None, colno=None, source=None):
        where = ""
        if source is not None:
            where += f"{source}:"
        if lineno is not None:
            where += f"{lineno}:{colno}:"
        super().__init__(f"{where} {msg}" if where else msg)
        self.lineno = lineno
        self.colno = colno
        self.source = source


class ProtocolError(RaindetError, ValueError):
    """An evaluation protocol cannot be run on the given data (e.g. a class is missing)."""


class ImageIOError(RaindetError, OSError):
    """An image file is missing or cannot be decoded."""

    def __init__(self, path, reason):
        super().__init__(f"{path}: {reason}")
        self.path = path
