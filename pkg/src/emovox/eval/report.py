"""Text tables and JSON documents for evaluation results.

Percentages in text tables carry one decimal.  The JSON document holds the
raw counts and is serialised with sorted keys so that equal inputs give
byte-identical files.
"""

from __future__ import annotations

import json

from .human import HumanReport
from .loso import EvaluationReport

GENDER_COLUMNS = ("female", "male")
REPORT_FORMAT_VERSION = 1


def pct(x) -> str:
    return "-" if x is None else f"{100.0 * x:.1f}"


def render_table(header, rows, title=None) -> str:
    cells = [list(map(str, header))] + [list(map(str, r)) for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]

    def line(r):
        first = r[0].ljust(widths[0])
        rest = (c.rjust(w) for c, w in zip(r[1:], widths[1:]))
        return "| " + " | ".join([first, *rest]) + " |"

    rule = "+" + "+".join("-" * (w + 2) for w in widths) + "+"
    out = [title] if title else []
    out += [rule, line(cells[0]), rule]
    out += [line(r) for r in cells[1:]]
    out.append(rule)
    return "\n".join(out)


def confusion_table(cm, title) -> str:
    header = [""] + [c.capitalize() for c in cm.classes]
    rows = []
    for i, c in enumerate(cm.classes):
        flag = " (no samples)" if c in cm.empty_rows else ""
        rows.append([f"{c.capitalize()} (GT){flag}"] + [f"{v:.1f}" for v in cm.percent[i]])
    return render_table(header, rows, title)


def _coverage_targets(report: EvaluationReport):
    return [r for r in report.coverage_pooled if r.coverage < 1.0]


def machine_rows(report: EvaluationReport, label="Computer system"):
    """Table rows for one evaluation: pooled-threshold and training-threshold variants."""
    genders = [pct(report.by_speaker_gender.get(g, {}).get("accuracy")) for g in GENDER_COLUMNS]
    pooled = _coverage_targets(report)
    calibrated = [r for r in report.coverage_calibrated if r.coverage < 1.0]
    rows = []
    for name, cov in ((f"{label}", pooled), (f"{label}, training thresholds", calibrated)):
        conf = [f"{pct(r.accuracy_classified)} ({pct(r.realized_coverage)}%)" for r in cov]
        unsure = [f"{pct(r.accuracy_rejected)} ({pct(1 - r.realized_coverage)}%)" for r in cov]
        rows.append([name, pct(report.accuracy_micro)] + genders + conf + unsure)
    return rows


def human_rows(report: HumanReport, label="Listeners"):
    def cells(name, block, by_speaker):
        conf = block["confident"]
        uns = block["unsure"]
        return [
            name,
            pct(block["accuracy"]),
            *[pct(by_speaker.get(g, {}).get("accuracy")) for g in GENDER_COLUMNS],
            f"{pct(conf['accuracy'])} ({pct(conf['prevalence'])}% confident)",
            f"{pct(uns['accuracy'])} ({pct(uns['prevalence'])}% unsure)",
        ]

    overall = dict(report.overall, **report.confidence)
    rows = [cells(f"All {label.lower()}", overall, report.by_speaker_gender)]
    for g in GENDER_COLUMNS:
        if g in report.by_worker_gender:
            w = report.by_worker_gender[g]
            rows.append(cells(f"{g.capitalize()} {label.lower()}", w, w["by_speaker_gender"]))
    return rows


def accuracy_table(report: EvaluationReport, human: HumanReport | None = None) -> str:
    """Overall, per-speaker-gender and per-confidence accuracy, machine and listeners."""
    targets = [r.coverage for r in _coverage_targets(report)]
    header = (
        ["Accuracy (%)", "Overall", "Female", "Male"]
        + [f"Confident ({pct(c)}%)" for c in targets]
        + [f"Unsure ({pct(1 - c)}%)" for c in targets]
    )
    rows = machine_rows(report)
    if human is not None:
        for r in human_rows(human):
            # listeners have one confident/unsure split however many coverage targets there are
            pad_c = [r[4]] + [""] * (len(targets) - 1) if targets else []
            pad_u = [r[5]] + [""] * (len(targets) - 1) if targets else []
            rows.append(r[:4] + pad_c + pad_u)
    return render_table(header, rows, f"Accuracy values (%) [{report.taxonomy}]")


def fold_table(report: EvaluationReport) -> str:
    rows = [[f["test_speaker"], f["n_test"], f["n_correct"], pct(f["accuracy"])] for f in report.to_dict()["folds"]]
    rows.append(["micro", report.n, sum(r[2] for r in rows), pct(report.accuracy_micro)])
    rows.append(["macro", "", "", pct(report.accuracy_macro)])
    return render_table(["Held-out speaker", "N", "Correct", "Accuracy"], rows, f"Per-fold accuracy [{report.taxonomy}]")


def coverage_table(report: EvaluationReport) -> str:
    rows = []
    for kind, group in (("pooled", report.coverage_pooled), ("training", report.coverage_calibrated)):
        for r in group:
            rows.append(
                [
                    kind,
                    pct(r.coverage),
                    pct(r.realized_coverage),
                    "-" if r.threshold is None else f"{r.threshold:.4f}",
                    pct(r.accuracy_classified),
                    pct(r.accuracy_rejected),
                ]
            )
    header = ["Thresholds", "Target cov.", "Realised cov.", "Threshold", "Acc. classified", "Acc. rejected"]
    return render_table(header, rows, f"Coverage-accuracy [{report.taxonomy}]")


def samples_table(human: HumanReport) -> str:
    buckets = sorted({b for per in human.samples_by_worker.values() for b in per})
    header = ["Worker gender"] + buckets + ["All"]
    rows = []
    for g, per in sorted(human.samples_by_worker.items()):
        rows.append([g] + [per.get(b, 0) for b in buckets] + [sum(per.values())])
    return render_table(header, rows, "Responses by listener gender and age")


def render_text(machine: dict, human: dict | None = None) -> str:
    """Full plain-text report for every evaluated taxonomy."""
    human = human or {}
    parts = []
    for tax, rep in machine.items():
        parts.append(accuracy_table(rep, human.get(tax)))
        parts.append(fold_table(rep))
        parts.append(coverage_table(rep))
        parts.append(confusion_table(rep.confusion, f"Confusion matrix, automatic system [{tax}] (rows: ground truth)"))
        if tax in human:
            parts.append(confusion_table(human[tax].confusion, f"Confusion matrix, listeners [{tax}] (rows: ground truth)"))
    for tax, hrep in human.items():
        if tax not in machine:
            parts.append(confusion_table(hrep.confusion, f"Confusion matrix, listeners [{tax}] (rows: ground truth)"))
    first = next(iter(human.values()), None)
    if first is not None and first.samples_by_worker:
        parts.append(samples_table(first))
    return "\n\n".join(parts) + "\n"


def report_document(machine: dict, human: dict | None = None) -> dict:
    return {
        "format_version": REPORT_FORMAT_VERSION,
        "machine": {t: r.to_dict() for t, r in machine.items()},
        "human": {t: r.to_dict() for t, r in (human or {}).items()},
    }


def dumps_report(machine: dict, human: dict | None = None) -> str:
    return json.dumps(report_document(machine, human), sort_keys=True, indent=1, allow_nan=False) + "\n"
