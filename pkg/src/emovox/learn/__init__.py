"""Preprocessing and model fitting: speaker z-norm, SMOTE, SMO-trained SVMs, SVM-RFE, Platt scaling."""

from .normalize import SpeakerNormalizer, SpeakerStats, fit_speaker_stats, zscore_apply
from .platt import PlattScaler, fit_platt, platt_probability
from .rfe import SVMRFE, FeatureSelection, svm_rfe
from .smote import smote_balance, smote_oversample
from .svm import BinarySVC, smo_solve, svm_decision, train_binary_svm

__all__ = [
    "BinarySVC",
    "FeatureSelection",
    "PlattScaler",
    "SVMRFE",
    "SpeakerNormalizer",
    "SpeakerStats",
    "fit_platt",
    "fit_speaker_stats",
    "platt_probability",
    "smo_solve",
    "smote_balance",
    "smote_oversample",
    "svm_decision",
    "svm_rfe",
    "train_binary_svm",
    "zscore_apply",
]
