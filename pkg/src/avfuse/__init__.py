"""avfuse: audio-visual stream fusion and multi-method anomaly scoring.

Aligns frame bursts with audio windows, extracts DSP features, detects and
tracks objects, fuses the modalities through cross-attention transformer
models built on a small reverse-mode tensor kernel, and scores anomalies
four ways, all wired into a bounded-queue staged pipeline with a CLI.
"""

__version__ = "0.1.0"

from .errors import AlignmentFailure, AvFuseError, InvalidConfig, InvalidInput, NotTrained
from .timebase import AlignedWindow, AudioClip, Frame, FrameBurst, align_audio_to_frames, validate_burst

__all__ = [
    "AlignedWindow",
    "AlignmentFailure",
    "AudioClip",
    "AvFuseError",
    "Frame",
    "FrameBurst",
    "InvalidConfig",
    "InvalidInput",
    "NotTrained",
    "align_audio_to_frames",
    "validate_burst",
    "__version__",
]
