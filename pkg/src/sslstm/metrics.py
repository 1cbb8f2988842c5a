"""Evaluation metrics for 4-class emotion prediction.

Covers the confusion matrix, per-class precision/recall/F1 (percent),
macro-F1 averaged over the three emotion classes (happy, sad, angry; the
catch-all class is excluded), McNemar's paired significance test, Fleiss'
kappa for multi-judge agreement, and label-distribution statistics.

All internal values are full precision; rounding to two decimals happens
only in the text/TSV formatting helpers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sslstm.labels import EMOTION_LABELS, LABELS, N_CLASSES, label_index

# Chi-square critical value, 1 degree of freedom, p = 0.005.
MCNEMAR_CRITICAL_005 = 7.879


@dataclass
class ConfusionMatrix:
    """4x4 count matrix; rows are gold labels, columns predictions, both in
    class order (happy, sad, angry, others)."""

    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (N_CLASSES, N_CLASSES):
            raise ValueError(f"confusion matrix must be {N_CLASSES}x{N_CLASSES}")
        if np.any(self.counts < 0):
            raise ValueError("confusion matrix counts must be non-negative")

    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class EvaluationReport:
    confusion: ConfusionMatrix
    per_class: dict[str, tuple[float, float, float]]
    macro_f1: float
    n_examples: int


def confusion(predictions, golds) -> ConfusionMatrix:
    """Count matrix over paired (gold, prediction) labels."""
    predictions = list(predictions)
    golds = list(golds)
    if len(predictions) != len(golds):
        raise ValueError(
            f"length mismatch: {len(predictions)} predictions vs {len(golds)} golds"
        )
    if not predictions:
        raise ValueError("cannot build a confusion matrix from zero examples")
    counts = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for pred, gold in zip(predictions, golds):
        counts[label_index(gold), label_index(pred)] += 1
    return ConfusionMatrix(counts)


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def prf1(cm: ConfusionMatrix, cls) -> tuple[float, float, float]:
    """(precision, recall, F1) for one class, as percentages.

    Any 0/0 ratio is defined as 0, so absent or never-predicted classes
    score zero instead of raising.
    """
    k = label_index(cls)
    tp = float(cm.counts[k, k])
    fp = float(cm.counts[:, k].sum() - tp)
    fn = float(cm.counts[k, :].sum() - tp)
    precision = 100.0 * tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = 100.0 * tp / (tp + fn) if tp + fn > 0 else 0.0
    return precision, recall, f1_score(precision, recall)


def macro_f1_from_scores(f1s) -> float:
    """Arithmetic mean of per-class F1 scores."""
    f1s = list(f1s)
    return float(np.mean(f1s)) if f1s else 0.0


def macro_f1(cm: ConfusionMatrix) -> float:
    """Mean F1 over the emotion classes only (happy, sad, angry)."""
    return macro_f1_from_scores(prf1(cm, cls)[2] for cls in EMOTION_LABELS)


def evaluate(predictions, golds) -> EvaluationReport:
    """Full report: confusion matrix, per-class scores, emotion macro-F1."""
    cm = confusion(predictions, golds)
    per_class = {cls: prf1(cm, cls) for cls in LABELS}
    return EvaluationReport(
        confusion=cm,
        per_class=per_class,
        macro_f1=macro_f1(cm),
        n_examples=cm.total(),
    )


def mcnemar(correct_a, correct_b) -> tuple[float, bool]:
    """Continuity-corrected McNemar statistic on paired correctness flags.

    b counts examples only classifier A got right, c those only B got right;
    the statistic is max(|b-c|-1, 0)^2/(b+c), compared against the
    chi-square(1) critical value for p < 0.005.  No discordant pairs means
    no evidence: statistic 0, not significant.
    """
    correct_a = [bool(x) for x in correct_a]
    correct_b = [bool(x) for x in correct_b]
    if len(correct_a) != len(correct_b):
        raise ValueError(
            f"length mismatch: {len(correct_a)} vs {len(correct_b)} paired outcomes"
        )
    b = sum(1 for x, y in zip(correct_a, correct_b) if x and not y)
    c = sum(1 for x, y in zip(correct_a, correct_b) if not x and y)
    if b + c == 0:
        return 0.0, False
    statistic = max(abs(b - c) - 1, 0) ** 2 / (b + c)
    return float(statistic), statistic > MCNEMAR_CRITICAL_005


def fleiss_kappa(judgments, n: int) -> float:
    """Fleiss' kappa for N items each labeled by n judges.

    ``judgments`` is an items x categories matrix of label counts.  Returns
    (observed - chance agreement) / (1 - chance agreement); degenerate
    all-one-category data (chance agreement 1) is defined as 1.
    """
    counts = np.asarray(judgments, dtype=np.float64)
    if counts.ndim != 2 or counts.shape[0] == 0:
        raise ValueError("judgments must be a non-empty items x categories matrix")
    if n < 2:
        raise ValueError("Fleiss' kappa needs at least 2 judges per item")
    row_sums = counts.sum(axis=1)
    bad = np.nonzero(row_sums != n)[0]
    if bad.size:
        raise ValueError(
            f"item {bad[0]} has {row_sums[bad[0]]:g} judgments, expected {n}"
        )
    n_items = counts.shape[0]
    p_item = ((counts**2).sum(axis=1) - n) / (n * (n - 1))
    p_bar = float(p_item.mean())
    p_cat = counts.sum(axis=0) / (n_items * n)
    p_e = float((p_cat**2).sum())
    if p_e >= 1.0:
        return 1.0
    return (p_bar - p_e) / (1.0 - p_e)


def dataset_stats(labels) -> dict[str, tuple[int, float]]:
    """Per-label (count, percentage) over a label sequence or records with a
    ``label`` attribute.  Percentages are rounded to two decimals; an empty
    input reports zero counts and 0 percent throughout."""
    counts = {cls: 0 for cls in LABELS}
    total = 0
    for item in labels:
        lab = getattr(item, "label", item)
        counts[LABELS[label_index(lab)]] += 1
        total += 1
    out = {}
    for cls in LABELS:
        pct = round(100.0 * counts[cls] / total, 2) if total else 0.0
        out[cls] = (counts[cls], pct)
    return out


def format_report(report: EvaluationReport) -> str:
    """Aligned plain-text rendering of an evaluation report."""
    lines = [f"{'class':<8}{'precision':>11}{'recall':>9}{'F1':>9}"]
    for cls in LABELS:
        p, r, f = report.per_class[cls]
        lines.append(f"{cls:<8}{p:>11.2f}{r:>9.2f}{f:>9.2f}")
    lines.append(f"macro-F1 (happy/sad/angry): {report.macro_f1:.2f}")
    lines.append(f"examples: {report.n_examples}")
    return "\n".join(lines)


def report_tsv(report: EvaluationReport) -> str:
    """Tab-separated rendering: header, one row per class, one macro row."""
    lines = ["class\tprecision\trecall\tf1"]
    for cls in LABELS:
        p, r, f = report.per_class[cls]
        lines.append(f"{cls}\t{p:.2f}\t{r:.2f}\t{f:.2f}")
    lines.append(f"macro\t\t\t{report.macro_f1:.2f}")
    return "\n".join(lines)


def format_stats(stats: dict[str, tuple[int, float]]) -> str:
    """Aligned text plus TSV block for a label-distribution summary."""
    total = sum(count for count, _ in stats.values())
    lines = [f"{'label':<8}{'count':>7}{'percent':>9}"]
    for cls, (count, pct) in stats.items():
        lines.append(f"{cls:<8}{count:>7}{pct:>9.2f}")
    lines.append(f"{'total':<8}{total:>7}")
    lines.append("")
    lines.append("label\tcount\tpercent")
    for cls, (count, pct) in stats.items():
        lines.append(f"{cls}\t{count}\t{pct:.2f}")
    return "\n".join(lines)
