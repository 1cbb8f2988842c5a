"""Emotion class labels and their canonical ordering.

The class order (happy, sad, angry, others) is fixed: it defines the row/column
order of confusion matrices, the output-layer ordering of the classifier, and
the tie-break order of every argmax in the package.
"""

from __future__ import annotations

import operator

LABELS = ("happy", "sad", "angry", "others")

# Macro-averaged scores cover the emotion classes only; "others" is excluded.
EMOTION_LABELS = ("happy", "sad", "angry")

LABEL_TO_INDEX = {name: i for i, name in enumerate(LABELS)}

N_CLASSES = len(LABELS)


def label_index(label: str | int) -> int:
    """Map a label name (any case) or an already-numeric index to 0..3."""
    if isinstance(label, str):
        try:
            return LABEL_TO_INDEX[label.lower()]
        except KeyError:
            raise ValueError(f"unknown label: {label!r}") from None
    try:
        idx = operator.index(label)
    except TypeError:
        raise ValueError(f"unknown label: {label!r}") from None
    if not 0 <= idx < N_CLASSES:
        raise ValueError(f"label index out of range: {idx}")
    return idx
