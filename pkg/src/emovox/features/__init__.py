"""Acoustic feature extraction: 60 ms frames, voiced-frame descriptors, utterance statistics."""

from .framing import detect_voicing, frame_signal, pitch_track
from .spectral import FRAME_FEATURE_NAMES, frame_feature_matrix, frame_features
from .utterance import (
    N_FEATURES,
    FeatureExtractor,
    FeatureVector,
    aggregate_statistics,
    append_derivatives,
    extract_feature_vector,
    feature_names,
    speaking_rate,
)

__all__ = [
    "FRAME_FEATURE_NAMES",
    "N_FEATURES",
    "FeatureExtractor",
    "FeatureVector",
    "aggregate_statistics",
    "append_derivatives",
    "detect_voicing",
    "extract_feature_vector",
    "feature_names",
    "frame_feature_matrix",
    "frame_features",
    "frame_signal",
    "pitch_track",
    "speaking_rate",
]
