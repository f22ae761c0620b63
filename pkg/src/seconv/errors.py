"""Exception hierarchy shared by the toolkit and the CLI."""


class SeConvError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(SeConvError, ValueError):
    """Bad argument values, shapes or configuration."""


class ShapeError(ValidationError):
    """Operands whose shapes are incompatible."""


class UnrestorableImageError(SeConvError):
    """Raised when an image has no clean pixels to restore from."""


class ImageFormatError(SeConvError):
    """Malformed or unsupported image file."""


class WeightFormatError(SeConvError):
    """Base class for weight-container load failures."""


class BadMagicError(WeightFormatError):
    pass


class TruncatedPayloadError(WeightFormatError):
    pass


class LayerShapeError(WeightFormatError):
    """A layer's declared or stored shape is inconsistent with the graph."""

    def __init__(self, layer_index: int, message: str):
        self.layer_index = layer_index
        super().__init__(f"layer {layer_index}: {message}")
