"""Speech emotion classification: acoustic features, one-against-all SVMs with a reject option, LOSO evaluation."""

__version__ = "0.1.0"

from .corpus import EMOTIONS, CorpusManifest, ManifestEntry, Utterance, load_manifest, load_utterance, map_labels
from .features import FeatureExtractor, FeatureVector, extract_feature_vector, feature_names
from .fusion import (
    OaaEnsemble,
    calibrate_threshold,
    classify,
    classify_with_rejection,
    load_model,
    save_model,
    train_oaa_ensemble,
)

__all__ = [
    "EMOTIONS",
    "CorpusManifest",
    "FeatureExtractor",
    "FeatureVector",
    "ManifestEntry",
    "OaaEnsemble",
    "Utterance",
    "__version__",
    "calibrate_threshold",
    "classify",
    "classify_with_rejection",
    "extract_feature_vector",
    "feature_names",
    "load_manifest",
    "load_model",
    "load_utterance",
    "map_labels",
    "save_model",
    "train_oaa_ensemble",
]
