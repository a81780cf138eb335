"""Screen-camera codec: quantization, repetition coding, modulation, frames."""

from .errors import CapacityExceeded, DecodeFailure, DegenerateConfiguration, DetectionFailure
from .frame import FrameLayout, FrameRaster, VelocityPayload, decode_frame, render_frame
from .detect import detect_markers
from .quantize import QuantizerSpec, dequantize, quantize, velocity_quantizers

__all__ = [
    "CapacityExceeded", "DecodeFailure", "DegenerateConfiguration", "DetectionFailure",
    "FrameLayout", "FrameRaster", "VelocityPayload", "decode_frame", "render_frame",
    "detect_markers", "QuantizerSpec", "dequantize", "quantize", "velocity_quantizers",
]
