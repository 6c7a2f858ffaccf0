"""Leave-one-speaker-out evaluation, metrics and listener-study reports."""

from .human import Annotation, AnnotationSet, HumanReport, human_report, import_human_annotations
from .loso import EvaluationReport, LosoFold, fold_seed, load_speaker_genders, loso_split, run_loso
from .metrics import ConfusionMatrix, CoverageRow, confusion_matrix, coverage_accuracy
from .report import dumps_report, render_text

__all__ = [
    "Annotation",
    "AnnotationSet",
    "ConfusionMatrix",
    "CoverageRow",
    "EvaluationReport",
    "HumanReport",
    "LosoFold",
    "confusion_matrix",
    "coverage_accuracy",
    "dumps_report",
    "fold_seed",
    "human_report",
    "import_human_annotations",
    "load_speaker_genders",
    "loso_split",
    "render_text",
    "run_loso",
]
