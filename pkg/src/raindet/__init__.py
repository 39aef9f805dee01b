"""Raindrop detection and segmentation on camera image sequences."""

__version__ = "0.1.0"

from .detector import (  # noqa: E402
    DetectionResult,
    DetectorParams,
    FrameSequence,
    averaged_gradient,
    detect,
    scale_params,
    segment,
)
from .errors import (  # noqa: E402
    DimensionError,
    InputError,
    ParameterError,
    ProtocolError,
    RaindetError,
    ValidationError,
)
from .nccbase import NccParams, ncc_detect, ncc_map  # noqa: E402

__all__ = [
    "DetectionResult",
    "DetectorParams",
    "DimensionError",
    "FrameSequence",
    "InputError",
    "NccParams",
    "ParameterError",
    "ProtocolError",
    "RaindetError",
    "ValidationError",
    "averaged_gradient",
    "detect",
    "ncc_detect",
    "ncc_map",
    "scale_params",
    "segment",
]
