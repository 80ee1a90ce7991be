"""wavehost: headless host and model manager for deep audio models.

Decodes and encodes audio, validates contributor model contracts, discovers
and installs models from a hub by tag, and runs waveform-to-waveform and
waveform-to-labels models locally — producing new audio tracks or label
tracks — behind a CLI and an HTTP control service.
"""

from .audio import (
    LabelEntry,
    LabelTrack,
    Waveform,
    decode_wav,
    encode_wav,
    mixdown,
    parse_labels,
    render_labels,
    resample,
)
from .contract import (
    MAX_OUTPUT_TRACKS,
    AnalysisOutput,
    ContractViolation,
    EffectType,
    MetadataError,
    ModelMetadata,
    parse_metadata,
    validate_analysis_output,
    validate_w2w_output,
)
from .errors import WavehostError

__version__ = "0.1.0"

__all__ = [
    "AnalysisOutput",
    "ContractViolation",
    "EffectType",
    "LabelEntry",
    "LabelTrack",
    "MAX_OUTPUT_TRACKS",
    "MetadataError",
    "ModelMetadata",
    "Waveform",
    "WavehostError",
    "decode_wav",
    "encode_wav",
    "mixdown",
    "parse_labels",
    "parse_metadata",
    "render_labels",
    "resample",
    "validate_analysis_output",
    "validate_w2w_output",
    "__version__",
]
