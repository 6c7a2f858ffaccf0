"""Experiment configuration stored as a flat ``key = value`` text file.

Blank lines and lines starting with ``#`` are ignored.  Unknown keys are an
error so that a typo cannot silently fall back to a default.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from ._io import atomic_write_text
from .exceptions import FormatError, ValidationError

TAXONOMY_CHOICES = ("emotion6", "apn", "pnn")
CALIBRATION_CHOICES = ("inner", "train")


def _parse_coverage(text: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    return tuple(float(p) for p in parts)


@dataclass(frozen=True)
class RunConfig:
    """Every tunable of a training or evaluation run.

    ``gamma`` is either the string ``"scale"`` or a positive float.  The
    remaining fields map one-to-one onto :class:`emovox.fusion.OaaEnsemble`
    parameters, except ``coverage`` (evaluation grid), ``seed``,
    ``cache_dir`` and ``calibration``.

    ``calibration`` picks the confidences that rejection thresholds are
    calibrated on during evaluation.  ``"inner"`` uses out-of-fold
    confidences from a speaker-grouped cross-validation inside the
    training speakers; ``"train"`` reuses the ensemble's confidences on its
    own training rows, which are optimistic.
    """

    taxonomy: str = "emotion6"
    C: float = 1.0
    gamma: object = "scale"
    tol: float = 1e-3
    rfe_k: int = 100
    rfe_step: float = 0.1
    rfe_C: float = 1.0
    smote_k: int = 5
    balance: str = "majority"
    normalization: str = "self"
    threshold: float = 0.0
    calibration: str = "inner"
    coverage: tuple = (0.5, 0.8, 1.0)
    seed: int = 0
    f0_min: float = 50.0
    f0_max: float = 500.0
    cache_dir: str = ""

    def __post_init__(self):
        if self.taxonomy not in TAXONOMY_CHOICES + ("all",):
            raise ValidationError(f"taxonomy must be one of {TAXONOMY_CHOICES + ('all',)}, got {self.taxonomy!r}")
        for name in ("C", "tol", "rfe_step", "rfe_C"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if self.gamma != "scale" and not (isinstance(self.gamma, float) and self.gamma > 0):
            raise ValidationError("gamma must be 'scale' or a positive number")
        if self.rfe_k < 1 or self.smote_k < 1:
            raise ValidationError("rfe_k and smote_k must be positive integers")
        if not 0 < self.f0_min < self.f0_max:
            raise ValidationError("need 0 < f0_min < f0_max")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValidationError("threshold must lie in [0, 1]")
        if not self.coverage or any(not 0 < c <= 1 for c in self.coverage):
            raise ValidationError("coverage values must lie in (0, 1]")
        if self.calibration not in CALIBRATION_CHOICES:
            raise ValidationError(f"calibration must be one of {CALIBRATION_CHOICES}, got {self.calibration!r}")
        if self.balance not in ("majority", "oaa", "none"):
            raise ValidationError(f"unknown balance policy {self.balance!r}")
        if self.normalization not in ("self", "global", "none"):
            raise ValidationError(f"unknown normalization policy {self.normalization!r}")

    def ensemble_params(self) -> dict:
        return {
            "C": self.C,
            "gamma": self.gamma,
            "tol": self.tol,
            "rfe_k": self.rfe_k,
            "rfe_step": self.rfe_step,
            "rfe_C": self.rfe_C,
            "smote_k": self.smote_k,
            "balance": self.balance,
            "normalization": self.normalization,
            "threshold": self.threshold,
        }

    def taxonomies(self) -> tuple[str, ...]:
        return TAXONOMY_CHOICES if self.taxonomy == "all" else (self.taxonomy,)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["coverage"] = list(self.coverage)
        return d

    def dumps(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "coverage":
                text = ", ".join(repr(float(c)) for c in v)
            elif isinstance(v, float):
                text = repr(v)
            else:
                text = str(v)
            lines.append(f"{f.name} = {text}")
        return "\n".join(lines) + "\n"


_CONVERTERS = {
    "taxonomy": str,
    "C": float,
    "gamma": lambda s: s if s == "scale" else float(s),
    "tol": float,
    "rfe_k": int,
    "rfe_step": float,
    "rfe_C": float,
    "smote_k": int,
    "balance": str,
    "normalization": str,
    "threshold": float,
    "calibration": str,
    "coverage": _parse_coverage,
    "seed": int,
    "f0_min": float,
    "f0_max": float,
    "cache_dir": str,
}


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise FormatError(f"{source}:{lineno}: expected 'key = value'")
        if key not in _CONVERTERS:
            raise FormatError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise FormatError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _CONVERTERS[key](value)
        except ValueError as exc:
            raise FormatError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), str(path))


def save_config(config: RunConfig, path) -> None:
    atomic_write_text(Path(path), config.dumps())
