"""
Evaluation toolkit tour
=======================

Precision/recall/F1 per class, macro-F1 over the emotion classes,
McNemar's significance test between two classifiers, Fleiss' kappa
for annotator agreement, and dataset distribution summaries.
"""

import numpy as np

from sslstm.metrics import (
    dataset_stats,
    evaluate,
    fleiss_kappa,
    format_report,
    format_stats,
    mcnemar,
)

# ---------------------------------------------------------------------------
# A synthetic evaluation run: gold labels and two models' predictions.

rng = np.random.default_rng(3)
golds = (["happy"] * 25 + ["sad"] * 25 + ["angry"] * 20 + ["others"] * 130)

def noisy_copy(labels, flip_rate):
    out = []
    for label in labels:
        if rng.random() < flip_rate:
            out.append(rng.choice(["happy", "sad", "angry", "others"]))
        else:
            out.append(label)
    return out

model_a = noisy_copy(golds, 0.10)
model_b = noisy_copy(golds, 0.35)

print("model A:")
print(format_report(evaluate(model_a, golds)))
print()
print("model B:")
print(format_report(evaluate(model_b, golds)))
print()

# ---------------------------------------------------------------------------
# Are A and B actually different, or is the gap noise?  McNemar's test
# looks only at the discordant outcomes.

correct_a = [p == g for p, g in zip(model_a, golds)]
correct_b = [p == g for p, g in zip(model_b, golds)]
statistic, significant = mcnemar(correct_a, correct_b)
print(f"McNemar statistic: {statistic:.2f}  "
      f"significant at p < 0.005: {'yes' if significant else 'no'}")
print()

# ---------------------------------------------------------------------------
# Annotator agreement.  Rows are items, columns are per-class judgment
# counts from 5 raters each.

judgments = np.array([
    [5, 0, 0, 0],
    [4, 1, 0, 0],
    [0, 5, 0, 0],
    [0, 1, 4, 0],
    [1, 0, 0, 4],
    [0, 0, 5, 0],
])
print(f"Fleiss' kappa over {judgments.shape[0]} items, 5 raters: "
      f"{fleiss_kappa(judgments, 5):.3f}")
print()

# ---------------------------------------------------------------------------
# Class distribution of a labeled dataset: emotion data is heavily
# skewed toward the catch-all class, which is why macro-F1 is computed
# over the three emotion classes only.

print(format_stats(dataset_stats(golds)))
